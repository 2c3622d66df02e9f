#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "stirap/error.hpp"
#include "stirap/hamiltonian.hpp"
#include "stirap/lindblad.hpp"

namespace stirap {

/// Homodyne response <I>(tau), <Q>(tau) with the transmon held in one state.
struct ReferenceTrace {
  std::vector<double> taus;  // ns
  std::vector<double> I;
  std::vector<double> Q;
  int state_label = 0;
};

/// Measured (mixed) response. Shares the tau grid of the references.
struct MeasuredTrace {
  std::vector<double> taus;
  std::vector<double> I;
  std::vector<double> Q;
};

using ReferenceSet = std::array<ReferenceTrace, 3>;
using Populations3 = std::array<double, 3>;

struct TomographyResult {
  Populations3 p{};
  double residual = 0.0;  // weighted RMS
  int iterations = 0;
  bool converged = false;
};

/// Raised when Levenberg-Marquardt hits the iteration cap; carries the best point.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, TomographyResult best) : NumericalError(what), best_(best) {}
  const TomographyResult& best() const noexcept { return best_; }

 private:
  TomographyResult best_;
};

struct ReadoutModel {
  double tau_max_ns = 1500.0;
  double dtau_ns = 5.0;
  /// Let |1>, |2> relax during the readout window (rates from TransmonParams).
  bool decay_during_readout = false;
};

/// Classical driven damped cavity, da/dtau = -(i D_j + kappa/2) a - i eps, with
/// D_j = w_res + pull_j - w_meas. I = -2 eta Re a, Q = -2 eta Im a.
/// Throws NonDispersiveError when the dispersive approximation fails.
ReferenceSet synth_reference_traces(const CavityParams& cav, const TransmonParams& trans,
                                    const ReadoutModel& readout = {});

/// Convex combination plus i.i.d. N(0, noise_std) on every I and Q sample.
/// Throws InvalidStateError unless p lies on the probability simplex.
MeasuredTrace mix_traces(const Populations3& p, const ReferenceSet& refs, double noise_std, std::uint64_t seed);

/// Largest |I| or |Q| over the three references.
double trace_scale(const ReferenceSet& refs);

/// 2-norm condition number of the weighted design matrix [r0 r1 r2].
double design_condition(const ReferenceSet& refs, double w_ns);

inline constexpr double kMaxDesignCondition = 1e6;

struct LmSettings {
  double lambda_init = 1e-3;
  double lambda_factor = 10.0;
  double step_tol = 1e-10;
  int max_iterations = 200;
};

/// Minimizes sum_tau e^{-2 tau/w} |meas - sum_j p_j r_j|^2 over the simplex,
/// with p2 = 1 - p0 - p1 and an active set on the three bounds.
/// Throws SingularDesignError when the references are degenerate and
/// ConvergenceError when the iteration cap is reached.
TomographyResult reconstruct_populations(const MeasuredTrace& meas, const ReferenceSet& refs, double w_ns = 700.0,
                                         const LmSettings& lm = {});

/// Mix -> reconstruct at every sample of a 3-level run. Sample k uses the
/// noise seed derive_seed(seed, k).
std::vector<TomographyResult> tomography_timeline(const SimResult& sim, const ReferenceSet& refs, double noise_std,
                                                  double w_ns, std::uint64_t seed, int workers = 1);

/// CSV with header tau_ns,I,Q,state_label.
void write_traces_csv(std::ostream& os, const ReferenceSet& refs);
void write_trace_csv(std::ostream& os, const MeasuredTrace& meas, int state_label = -1);
/// Reads the rows of a reference CSV back. Throws ConfigError on malformed input.
ReferenceSet read_traces_csv(std::istream& is);

}  // namespace stirap
