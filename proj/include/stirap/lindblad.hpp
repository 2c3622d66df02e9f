#pragma once

#include <string>
#include <vector>

#include "stirap/core.hpp"
#include "stirap/hamiltonian.hpp"
#include "stirap/pulse.hpp"

namespace stirap {

struct Jump {
  ComplexMatrix op;
  double rate = 0.0;  // 1/ns
  std::string label;
};

struct LindbladSpec {
  int dim = 3;
  std::vector<Jump> jumps;
};

/// Relaxation |0><1| (Gamma10), |1><2| (Gamma21) and dephasing projectors
/// |1><1| (2 Gamma10^phi), |2><2| (2 Gamma21^phi). In the split variant both
/// |1a>, |1b> take the |1>-type jumps, the 2 -> 1x decay weighted by w_x^2.
LindbladSpec build_dissipators(const TransmonParams& params);

/// -i[H, rho] + sum_k rate_k (L rho L^dag - {L^dag L, rho} / 2).
ComplexMatrix lindblad_rhs(const DensityMatrix& rho, const ComplexMatrix& h, const LindbladSpec& spec);

struct TimeGrid {
  double t_start = 0.0;
  double t_end = 0.0;
  double dt = 0.1;
  int sample_stride = 10;

  /// Grid spanning the sequence window.
  static TimeGrid covering(const PulseSequence& seq, double dt = 0.1, int sample_stride = 10);

  long steps() const;
  /// Step actually taken: span / steps(), never above dt.
  double step_size() const;
  /// Throws ConfigError unless dt > 0, span/dt >= 10, stride >= 1 and, when
  /// driving Gaussians of width sigma, dt <= sigma/50.
  void validate(double min_sigma) const;
};

struct SimResult {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  std::vector<Ket> kets;  // unitary runs only
  std::vector<std::vector<double>> populations;
  std::vector<double> trace_deviation;  // |Tr rho - 1| per sample
  /// Per-level maxima of p_j over every integration step.
  std::vector<double> peak_populations;
  double trace_drift = 0.0;
  double min_eig = 0.0;
  double max_hermiticity_deviation = 0.0;
  long steps = 0;

  const std::vector<double>& final_populations() const { return populations.back(); }
};

struct EvolveOptions {
  /// Keep density matrices (and kets) at every sample.
  bool store_states = true;
};

/// Fixed-step RK4 of the master equation with H rebuilt from the sequence at
/// every substep. With dissipative = false and a pure rho0 the state vector
/// is propagated instead. Throws IntegrationError when the trace drifts by
/// more than 1e-6 or an eigenvalue drops below -1e-6.
SimResult evolve(const DensityMatrix& rho0, const PulseSequence& seq, const TransmonParams& params,
                 const TimeGrid& grid, bool dissipative, const EvolveOptions& options = {});

/// Schroedinger propagation of a ket.
SimResult evolve_ket(const Ket& psi0, const PulseSequence& seq, const TransmonParams& params, const TimeGrid& grid,
                     const EvolveOptions& options = {});

/// System Hamiltonian (3x3, or 4x4 for a split transmon) at time t.
ComplexMatrix hamiltonian_at(double t, const PulseSequence& seq, const TransmonParams& params);

inline constexpr double kRunTraceTol = 1e-6;
inline constexpr double kRunPositivityTol = 1e-6;

}  // namespace stirap
