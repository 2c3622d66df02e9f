#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stirap/hamiltonian.hpp"
#include "stirap/pulse.hpp"
#include "stirap/tomography.hpp"

namespace stirap {

inline constexpr const char* kVersion = "0.3.1";

enum class Experiment {
  TimeEvolution,
  SeparationSweep,
  DetuningMap,
  Hybrid,
  Reversal,
  SplitMap,
  TomographyTimeline,
  Berry
};

std::string to_string(Experiment e);
/// Accepts the upper-case names (TIME_EVOLUTION, ...). Throws ConfigError.
Experiment experiment_from_string(const std::string& s);

enum class OutputFormat { Csv, Json };
enum class MapMetric { Final, Peak };

struct AxisSpec {
  std::string name;  // unit-suffixed, e.g. "separation_ns"
  std::vector<double> values;
};

struct TomographyConfig {
  double noise_rel = 0.01;  // noise_std / trace_scale
  double w_ns = 700.0;
  ReadoutModel readout;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::TimeEvolution;
  TransmonParams transmon;
  SequenceParams pulses;  // angular units; sweep times relative to the 01 peak
  double dt_ns = 0.1;
  int sample_stride = 10;
  std::vector<AxisSpec> axes;
  MapMetric map_metric = MapMetric::Final;
  CavityParams cavity;
  TomographyConfig tomography;
  double berry_min_metric = 10.0;
  bool dissipation = true;
  std::uint64_t seed = 0;
  int workers = 0;  // 0: hardware concurrency
  std::string output_dir = "out";
  OutputFormat format = OutputFormat::Csv;

  /// Fully expanded config with every default filled in; hashed for provenance.
  nlohmann::json canonical() const;
  /// FNV-1a 64 of canonical().dump(), 16 hex digits.
  std::string hash() const;
};

/// Strict parse: unknown keys, wrong types, empty axes and bad units raise
/// ConfigError before any computation.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Paper-default config for an experiment (used when keys are absent).
ExperimentConfig default_config(Experiment e);

struct TimeSeries {
  std::string label;
  std::vector<double> axis_point;  // sweep coordinates, empty for single runs
  std::vector<double> t_ns;        // relative to the 01 peak
  std::vector<std::vector<double>> values;
  std::vector<std::string> columns;  // names of `values` columns
};

struct SweepResult {
  Experiment experiment = Experiment::TimeEvolution;
  std::vector<AxisSpec> axes;
  std::vector<std::string> fields;
  /// Row-major over axes (last axis fastest); one value per field.
  std::vector<std::vector<double>> cells;
  /// Empty string for a good cell, otherwise the error message.
  std::vector<std::string> cell_errors;
  std::vector<TimeSeries> series;
  nlohmann::ordered_json summary;
  std::string config_hash;
  double runtime_s = 0.0;  // reported, never written to result files

  std::size_t cell_count() const;
  std::size_t failed_cells() const;
  /// Field index; throws std::out_of_range for an unknown name.
  std::size_t field(const std::string& name) const;
  double value(std::size_t cell, const std::string& name) const { return cells[cell][field(name)]; }
};

SweepResult run_time_evolution(const ExperimentConfig& cfg);
SweepResult run_separation_sweep(const ExperimentConfig& cfg);
SweepResult run_detuning_map(const ExperimentConfig& cfg);
SweepResult run_hybrid(const ExperimentConfig& cfg);
SweepResult run_reversal(const ExperimentConfig& cfg);
SweepResult run_split_map(const ExperimentConfig& cfg);
SweepResult run_tomography_timeline(const ExperimentConfig& cfg);
SweepResult run_berry(const ExperimentConfig& cfg);
/// Dispatches on cfg.experiment.
SweepResult run_experiment(const ExperimentConfig& cfg);

/// Writes result files plus manifest.json into `dir`; returns the file names.
std::vector<std::string> emit(const SweepResult& result, const ExperimentConfig& cfg, const std::filesystem::path& dir,
                              OutputFormat format);

// Map analysis helpers, exposed for tests.

struct WidthEstimate {
  double width = 0.0;
  bool lower_bound = false;  // profile never fell below half maximum on some side
};

/// Full width at half maximum of a sampled profile, linear interpolation of
/// the crossings; an unresolved side is clamped to the axis end.
WidthEstimate fwhm(const std::vector<double>& x, const std::vector<double>& y);

/// Connected components of (values > threshold) on a rows x cols grid, 4-connectivity.
int count_blobs(const std::vector<double>& values, std::size_t rows, std::size_t cols, double threshold,
                std::vector<int>* labels = nullptr);

/// Number of slope sign changes of y (strict local extrema).
int count_alternations(const std::vector<double>& y, double tol = 1e-9);

}  // namespace stirap
