#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "stirap/error.hpp"
#include "stirap/harness.hpp"

using namespace stirap;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("stirap_harness_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::map<std::string, std::string> emit_all(const SweepResult& r, const ExperimentConfig& c, const std::string& tag) {
  const auto dir = scratch(tag);
  std::map<std::string, std::string> out;
  for (const auto& f : emit(r, c, dir, c.format)) out[f] = slurp(dir / f);
  return out;
}

ExperimentConfig small_map(const std::string& experiment) {
  return parse_config(json::parse(R"({"experiment": ")" + experiment + R"(",
    "axes": [{"name": "detuning_sum_mhz", "values": [-12, 0, 12]},
             {"name": "detuning_diff_mhz", "start": -20, "stop": 20, "step": 20}]})"));
}

}  // namespace

TEST_CASE("experiment names") {
  for (auto e : {Experiment::TimeEvolution, Experiment::SeparationSweep, Experiment::DetuningMap, Experiment::Hybrid,
                 Experiment::Reversal, Experiment::SplitMap, Experiment::TomographyTimeline, Experiment::Berry})
    CHECK(experiment_from_string(to_string(e)) == e);
  CHECK_THROWS_AS(experiment_from_string("time_evolution"), ConfigError);
}

TEST_CASE("config parsing is strict") {
  CHECK_THROWS_AS(parse_config(json::parse(R"({})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"experiment": "TIME_EVOLUTION", "sigma": 3})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"experiment": "TIME_EVOLUTION", "pulses": {"sigma": 3}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"experiment": "TIME_EVOLUTION", "pulses": {"sigma_ns": "45"}})")),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config(json::parse(R"({"experiment": "SEPARATION_SWEEP", "axes": [{"name": "separation_ns", "values": []}]})")),
      ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(
                      R"({"experiment": "SEPARATION_SWEEP", "axes": [{"name": "separation_ns", "start": 5, "stop": 0, "step": 1}]})")),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config(json::parse(R"({"experiment": "SEPARATION_SWEEP", "axes": [{"name": "sigma_ns", "values": [1]}]})")),
      ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"experiment": "TIME_EVOLUTION", "transmon": {"gamma10_mhz": -1}})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"experiment": "TIME_EVOLUTION", "seed": -4})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"experiment": "TIME_EVOLUTION", "output": {"format": "xml"}})")),
                  ConfigError);
}

TEST_CASE("defaults and units") {
  const ExperimentConfig c = parse_config(json::parse(R"({"experiment": "TIME_EVOLUTION",
      "pulses": {"omega01_mhz": 10}, "seed": 5})"));
  CHECK(c.pulses.omega01 == doctest::Approx(2 * std::numbers::pi * 0.01));
  CHECK(c.pulses.omega12 == doctest::Approx(2 * std::numbers::pi * 0.0382));
  CHECK(c.pulses.sigma == 45.0);
  CHECK(c.pulses.separation == -90.0);
  CHECK(c.seed == 5);
  const ExperimentConfig s = default_config(Experiment::SeparationSweep);
  REQUIRE(s.axes.size() == 1);
  CHECK(s.axes[0].values.size() == 81);
  CHECK(s.axes[0].values.front() == -200.0);
  CHECK(s.axes[0].values.back() == 200.0);
}

TEST_CASE("config hash ignores output location and worker count") {
  ExperimentConfig a = default_config(Experiment::TimeEvolution);
  ExperimentConfig b = a;
  b.output_dir = "elsewhere";
  b.workers = 7;
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  b.seed = 1;
  CHECK(a.hash() != b.hash());
  CHECK(parse_config(a.canonical()).hash() == a.hash());
}

TEST_CASE("fwhm") {
  std::vector<double> x, y;
  for (int k = -300; k <= 300; ++k) {
    x.push_back(k * 0.1);
    y.push_back(std::exp(-x.back() * x.back() / (2 * 4.0)));
  }
  const WidthEstimate w = fwhm(x, y);
  CHECK(w.width == doctest::Approx(2 * std::sqrt(2 * std::log(2.0)) * 2.0).epsilon(1e-3));
  CHECK_FALSE(w.lower_bound);
  const std::vector<double> flat{1, 1, 1, 0.9};
  const WidthEstimate f = fwhm({0, 1, 2, 3}, flat);
  CHECK(f.lower_bound);
  CHECK(f.width == 3.0);
}

TEST_CASE("blob counting") {
  // clang-format off
  const std::vector<double> g{
      0.9, 0.9, 0.1, 0.8,
      0.1, 0.9, 0.1, 0.8,
      0.1, 0.1, 0.1, 0.1,
      0.7, 0.1, 0.6, 0.1};
  // clang-format on
  std::vector<int> labels;
  CHECK(count_blobs(g, 4, 4, 0.5, &labels) == 4);
  CHECK(labels[0] == labels[5]);
  CHECK(labels[2] == -1);
  CHECK(count_blobs(g, 4, 4, 0.95) == 0);
  const std::vector<double> diag{0.9, 0.1, 0.1, 0.9};
  CHECK(count_blobs(diag, 2, 2, 0.5) == 2);
}

TEST_CASE("alternation counting") {
  CHECK(count_alternations({0, 1, 2, 3}) == 0);
  CHECK(count_alternations({0, 1, 0, 1}) == 2);
  CHECK(count_alternations({0, 1, 1, 1, 0}) == 1);
  CHECK(count_alternations({0, 1e-12, 0}, 1e-9) == 0);
}

TEST_CASE("time evolution output schema") {
  ExperimentConfig c = default_config(Experiment::TimeEvolution);
  const SweepResult r = run_experiment(c);
  CHECK(r.summary["peak_p2"].get<double>() == doctest::Approx(0.83).epsilon(0.05 / 0.83));
  CHECK(r.summary["dissipationless_final_p2"].get<double>() >= 0.99);
  const auto files = emit_all(r, c, "te");
  const std::string& csv = files.at("time_evolution_dissipative.csv");
  CHECK(csv.substr(0, csv.find('\n')) == "t_ns,p0,p1,p2,trace_drift");
  CHECK(files.at("time_evolution_dissipationless.csv").rfind("t_ns,p0,p1,p2,trace_drift\n", 0) == 0);
  CHECK(files.count("manifest.json") == 1);
  const json manifest = json::parse(files.at("manifest.json"));
  CHECK(manifest["config_hash"] == c.hash());
  CHECK(manifest["version"] == kVersion);

  // Every emitted population triple sums to one.
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    double t, p0, p1, p2, drift;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &t, &p0, &p1, &p2, &drift) == 5);
    CHECK(std::abs(p0 + p1 + p2 - 1.0) < 1e-6);
    ++rows;
  }
  CHECK(rows == static_cast<int>(r.series.front().t_ns.size()));
  CHECK(r.series.front().t_ns.front() == doctest::Approx(-270.0));
}

TEST_CASE("zero amplitudes leave the ground state alone") {
  ExperimentConfig c = default_config(Experiment::TimeEvolution);
  c.pulses.omega01 = c.pulses.omega12 = 0.0;
  const SweepResult r = run_experiment(c);
  for (const auto& row : r.series.front().values) CHECK(row[0] == 1.0);
}

TEST_CASE("sweeps are deterministic and independent of the worker count") {
  ExperimentConfig c = parse_config(json::parse(R"({"experiment": "SEPARATION_SWEEP",
      "axes": [{"name": "separation_ns", "start": -100, "stop": 20, "step": 30}]})"));
  c.workers = 1;
  const auto serial = emit_all(run_experiment(c), c, "det1");
  c.workers = 4;
  const auto parallel = emit_all(run_experiment(c), c, "det4");
  const auto again = emit_all(run_experiment(c), c, "det4b");
  CHECK(serial == parallel);
  CHECK(parallel == again);
  c.format = OutputFormat::Json;
  CHECK(emit_all(run_experiment(c), c, "detj1") == emit_all(run_experiment(c), c, "detj2"));
}

TEST_CASE("detuning map cells depend on coordinates only") {
  const ExperimentConfig a = small_map("DETUNING_MAP");
  ExperimentConfig b = a;
  std::swap(b.axes[0], b.axes[1]);
  const SweepResult ra = run_experiment(a);
  const SweepResult rb = run_experiment(b);
  REQUIRE(ra.cell_count() == 9);
  const std::size_t f = ra.field("final_p2");
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(ra.cells[i * 3 + j][f] == rb.cells[j * 3 + i][f]);

  // Origin cell is the plain time-evolution endpoint.
  const SweepResult te = run_experiment(default_config(Experiment::TimeEvolution));
  CHECK(std::abs(ra.value(4, "final_p2") - te.summary["final_p2"].get<double>()) < 1e-9);
  CHECK(std::abs(ra.value(4, "peak_p2") - te.summary["peak_p2"].get<double>()) < 1e-9);
  for (std::size_t i = 0; i < ra.cell_count(); ++i)
    CHECK(std::abs(ra.value(i, "final_p0") + ra.value(i, "final_p1") + ra.value(i, "final_p2") - 1.0) < 1e-6);
}

TEST_CASE("degenerate split map equals the three-level map") {
  const ExperimentConfig three = small_map("DETUNING_MAP");
  ExperimentConfig four = small_map("SPLIT_MAP");
  four.transmon.split = SplitLevel{0.0, 1.0, 0.0};
  four.map_metric = MapMetric::Final;
  const SweepResult a = run_experiment(three);
  const SweepResult b = run_experiment(four);
  for (std::size_t i = 0; i < a.cell_count(); ++i) {
    CHECK(std::abs(a.value(i, "final_p2") - b.value(i, "final_p2")) < 1e-6);
    CHECK(std::abs(a.value(i, "final_p1") - b.value(i, "final_p1a") - b.value(i, "final_p1b")) < 1e-6);
  }
  ExperimentConfig no_split = four;
  no_split.transmon.split.reset();
  CHECK_THROWS_AS(run_experiment(no_split), ConfigError);
}

TEST_CASE("hybrid without a fast pulse is plain STIRAP") {
  ExperimentConfig c = parse_config(json::parse(R"({"experiment": "HYBRID",
      "axes": [{"name": "theta_fast_rad", "values": [0]}]})"));
  const SweepResult h = run_experiment(c);
  const SweepResult te = run_experiment(default_config(Experiment::TimeEvolution));
  for (const char* k : {"final_p0", "final_p1", "final_p2"})
    CHECK(std::abs(h.value(0, k) - te.summary[k].get<double>()) < 1e-9);
}

TEST_CASE("hybrid transfer follows the ground-state weight") {
  // Adiabatic limit: only the |0> amplitude rides the dark state to |2>.
  ExperimentConfig c = default_config(Experiment::Hybrid);
  c.dissipation = false;
  c.pulses.omega01 *= 2.0;
  c.pulses.omega12 *= 2.0;
  const SweepResult r = run_experiment(c);
  REQUIRE(r.failed_cells() == 0);
  CHECK(r.summary["final_p2_non_increasing"].get<bool>());
  for (std::size_t i = 0; i < r.cell_count(); ++i) {
    const double theta = r.axes[0].values[i];
    const double c2 = std::cos(theta / 2) * std::cos(theta / 2);
    CHECK(std::abs(r.value(i, "final_p2") - c2) < 0.01);
  }
  CHECK(r.value(r.cell_count() - 1, "final_p2") < 0.01);

  // Measured amplitudes: late 0-1 Rabi cycling after the pair.
  ExperimentConfig d = default_config(Experiment::Hybrid);
  d.dissipation = false;
  const SweepResult s = run_experiment(d);
  REQUIRE(s.failed_cells() == 0);
  CHECK(s.value(10, "late_p1_alternations") >= 2);
}

TEST_CASE("reversal summary") {
  ExperimentConfig c = default_config(Experiment::Reversal);
  const SweepResult r = run_experiment(c);
  CHECK(r.summary["dissipationless_final_p0"].get<double>() >= 0.98);
  const double p0 = r.summary["final_p0"].get<double>();
  CHECK(p0 > r.summary["final_p1"].get<double>());
  CHECK(p0 > r.summary["final_p2"].get<double>());
  CHECK(r.summary["max_p2"].get<double>() > 0.5);
}

TEST_CASE("failed cells are recorded and the run continues") {
  ExperimentConfig c = default_config(Experiment::Berry);
  c.axes = {AxisSpec{"sigma_ns", {60.0, 110.0}}};
  const SweepResult r = run_experiment(c);
  CHECK(r.failed_cells() == 1);
  CHECK_FALSE(r.cell_errors[0].empty());
  CHECK(std::isnan(r.value(0, "gamma_berry")));
  CHECK(r.value(1, "mismatch") < 1e-2);
  const auto files = emit_all(r, c, "failed");
  const json j = json::parse(files.at("berry_summary.json"));
  CHECK(j["metadata"]["complete"] == false);
  CHECK(files.at("berry_map.csv").find("failed") != std::string::npos);
}

TEST_CASE("tomography timeline") {
  ExperimentConfig c = default_config(Experiment::TomographyTimeline);
  c.tomography.noise_rel = 0.0;
  const SweepResult r = run_experiment(c);
  CHECK(r.summary["max_abs_error"].get<double>() < 1e-6);
  const auto files = emit_all(r, c, "tomo");
  CHECK(files.at("tomography_timeline_reference_traces.csv").rfind("tau_ns,I,Q,state_label\n", 0) == 0);
}

TEST_CASE("load_config reports unreadable files") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  const auto dir = scratch("load");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "bad.json") << "{ \"experiment\": ";
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  std::ofstream(dir / "ok.json") << "// comment\n{ \"experiment\": \"REVERSAL\" }";
  CHECK(load_config(dir / "ok.json").experiment == Experiment::Reversal);
}
