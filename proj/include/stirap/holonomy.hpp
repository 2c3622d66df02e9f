#pragma once

#include <optional>
#include <vector>

#include "stirap/hamiltonian.hpp"
#include "stirap/lindblad.hpp"
#include "stirap/pulse.hpp"

namespace stirap {

struct PathSample {
  double t = 0.0;      // ns
  double theta = 0.0;  // rad, [0, pi/2]
  double phi = 0.0;    // rad, unwrapped
};

/// Dark-state control path R = (theta, phi).
struct ParameterPath {
  std::vector<PathSample> samples;

  /// Throws ConfigError unless t strictly increases and theta stays in [0, pi/2].
  void validate() const;
  /// Same points traversed backwards (t mirrored so it still increases).
  ParameterPath reversed() const;
};

/// (theta, phi) realized by a sequence: theta = atan2(O01, O12), phi = p01 + p12.
ParameterPath path_from_sequence(const PulseSequence& seq, double t0, double t1, std::size_t intervals);

/// Trapezoid rule for -int sin^2(theta) dphi along the samples.
double berry_phase(const ParameterPath& path);

/// Same integral along the path of a sequence, doubling the sampling until
/// successive estimates differ by less than `tol`.
double berry_phase(const PulseSequence& seq, double t0, double t1, double tol = 1e-8);

/// Nearest-branch continuation of a phase series.
std::vector<double> unwrap(const std::vector<double>& phases);

/// Maps to (-pi, pi].
double wrap_phase(double x);

struct PhaseResult {
  double gamma_berry = 0.0;
  std::optional<double> gamma_oracle;
  double mismatch = 0.0;   // |wrap(berry - oracle)|
  double leakage = 0.0;    // 1 - |<D|psi>|^2 at t_f
  double dynamical = 0.0;  // int <D|H|D> dt
  double metric = 0.0;     // global adiabaticity metric of the sequence
};

inline constexpr double kOracleMaxLeakage = 0.01;

/// Starts in the instantaneous dark state, integrates the Schroedinger
/// equation over the grid and reads arg <D(t_f)|psi(t_f)> with the dynamical
/// phase added back. Throws PreconditionError unless d01 = d12 = 0 and the
/// global adiabaticity metric exceeds `min_metric`; NonAdiabaticError when
/// the leakage exceeds 0.01.
PhaseResult adiabatic_phase_oracle(const PulseSequence& seq, const TransmonParams& params, const TimeGrid& grid,
                                   double min_metric = 10.0);

}  // namespace stirap
