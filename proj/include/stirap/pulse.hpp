#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "stirap/drive.hpp"

namespace stirap {

enum class Transition { T01, T12 };

/// Smooth phase ramp: phi(t) = phi0 + winding * (1 - cos(pi u)) / 2 with
/// u = (t - start) / (stop - start) clamped to [0, 1].
struct PhaseSweep {
  double start = 0.0;  // ns
  double stop = 0.0;   // ns
  double winding = 0.0;  // rad

  double offset(double t) const;
  double rate(double t) const;
};

/// Omega * exp(-(t - center)^2 / (2 width^2)) carried at phase `phase`.
struct GaussianPulse {
  Transition transition = Transition::T01;
  double amplitude = 0.0;  // rad/ns
  double center = 0.0;     // ns
  double width = 1.0;      // sigma, ns
  double detuning = 0.0;   // rad/ns
  double phase = 0.0;      // rad
  std::optional<PhaseSweep> sweep;

  double phase_at(double t) const;
  double phase_rate(double t) const;
};

/// Rectangular pulse of area `angle` spread over [start, start + duration).
struct FastPulse {
  Transition transition = Transition::T01;
  double angle = 0.0;     // rad
  double duration = 10.0;  // ns
  double start = 0.0;     // ns
  double detuning = 0.0;
  double phase = 0.0;

  double amplitude() const { return angle / duration; }
  double end() const { return start + duration; }
  double envelope(double t) const;
};

using Pulse = std::variant<GaussianPulse, FastPulse>;

/// Omega * exp(-(t-t0)^2 / 2 sigma^2). Throws InvalidPulseError for sigma <= 0.
double gaussian_envelope(double t, const GaussianPulse& pulse);
double gaussian_envelope_derivative(double t, const GaussianPulse& pulse);

/// Real envelopes and their time derivatives on both transitions.
struct EnvelopePair {
  double omega01 = 0.0;
  double omega12 = 0.0;
  double d_omega01 = 0.0;
  double d_omega12 = 0.0;
};

class PulseSequence {
 public:
  PulseSequence() = default;
  /// Validates the window (every Gaussian center +- 4 sigma, every fast pulse)
  /// and that pulses sharing a transition share one detuning.
  PulseSequence(std::vector<Pulse> pulses, double separation, double t_start, double t_end);

  const std::vector<Pulse>& pulses() const noexcept { return pulses_; }
  double separation() const noexcept { return separation_; }
  double t_start() const noexcept { return t_start_; }
  double t_end() const noexcept { return t_end_; }
  /// Peak of the first 01 Gaussian; time origin of reported series.
  double reference_time() const noexcept { return reference_time_; }

  /// Narrowest Gaussian width, or 0 when the sequence has no Gaussians.
  double min_width() const;
  std::size_t gaussian_count() const;

  /// Drive amplitudes and phases on both transitions at time t. Pulses on the
  /// same transition add as complex amplitudes.
  DriveSample sample(double t) const;
  EnvelopePair envelopes(double t) const;

  double detuning01() const noexcept { return detuning01_; }
  double detuning12() const noexcept { return detuning12_; }

 private:
  std::vector<Pulse> pulses_;
  double separation_ = 0.0;
  double t_start_ = 0.0;
  double t_end_ = 0.0;
  double reference_time_ = 0.0;
  double detuning01_ = 0.0;
  double detuning12_ = 0.0;
};

enum class SequenceKind { Stirap, Intuitive, Hybrid, Reversal };

struct SequenceParams {
  double omega01 = 0.0;  // rad/ns
  double omega12 = 0.0;  // rad/ns
  double sigma = 45.0;   // ns
  double separation = -90.0;  // t_s = t(12 peak) - t(01 peak), ns
  double detuning01 = 0.0;
  double detuning12 = 0.0;
  double phase01 = 0.0;
  double phase12 = 0.0;
  std::optional<PhaseSweep> phase12_sweep;
  double theta_fast = 0.0;     // HYBRID
  double fast_duration = 10.0;  // HYBRID, ns
  double reversal_spacing = 0.0;  // REVERSAL; 0 means |separation|
  double truncation_sigmas = 4.0;
};

/// Two-pulse layouts put the 12 peak at +t_s/2 and the 01 peak at -t_s/2.
/// STIRAP and HYBRID need t_s <= 0, INTUITIVE needs t_s >= 0.
PulseSequence build_sequence(SequenceKind kind, const SequenceParams& params);

/// Two-pulse layout for either sign of t_s (used by separation sweeps).
PulseSequence build_two_pulse(const SequenceParams& params);

/// |dO01 O12 - O01 dO12| / (O01^2 + O12^2)^{3/2}. Throws SingularPointError
/// when O01^2 + O12^2 < 1e-24.
double local_adiabaticity(double t, const PulseSequence& seq);

enum class FrequencyConvention { Angular, Cyclic };

struct AdiabaticityReport {
  double local_max = 0.0;
  double global_metric = 0.0;
  bool satisfied = false;
  double threshold = 1.0;
  /// Integral of sqrt(O01^2 + O12^2) over the whole line, rad.
  double rms_area = 0.0;
  double area_lower = 0.0;  // 2 sqrt(pi) sigma Omega
  double area_upper = 0.0;  // 2 sqrt(2 pi) sigma Omega
  bool area_within_bounds = false;
};

/// (4/sqrt(pi)) sigma Omega with Omega = sqrt(O01 O12). Needs exactly two
/// Gaussian pulses, otherwise ConfigError.
AdiabaticityReport global_adiabaticity_metric(const PulseSequence& seq,
                                              FrequencyConvention convention = FrequencyConvention::Cyclic,
                                              double threshold = 1.0, double area_rel_tol = 1e-4);

/// Composite Simpson integral of sqrt(O01^2 + O12^2) from a to b.
double rms_area(const PulseSequence& seq, double a, double b, int intervals);

}  // namespace stirap
