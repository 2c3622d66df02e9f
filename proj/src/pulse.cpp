#include "stirap/pulse.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <type_traits>

#include "stirap/error.hpp"

namespace stirap {

namespace {

using cplx = std::complex<double>;

constexpr double kWindowSlack = 1e-9;

double clamp01(double u) { return std::clamp(u, 0.0, 1.0); }

struct ComplexDrive {
  cplx value{0.0, 0.0};
  cplx rate{0.0, 0.0};
  bool any = false;
  double first_phase = 0.0;
};

void accumulate(ComplexDrive& d, double envelope, double d_envelope, double phase, double phase_rate) {
  const cplx carrier = std::polar(1.0, phase);
  d.value += envelope * carrier;
  d.rate += cplx(d_envelope, envelope * phase_rate) * carrier;
  if (!d.any) {
    d.first_phase = phase;
    d.any = true;
  }
}

struct DriveState {
  ComplexDrive t01;
  ComplexDrive t12;
};

DriveState evaluate(const std::vector<Pulse>& pulses, double t) {
  DriveState s;
  for (const Pulse& p : pulses) {
    std::visit(
        [&](const auto& pulse) {
          using T = std::decay_t<decltype(pulse)>;
          ComplexDrive& target = pulse.transition == Transition::T01 ? s.t01 : s.t12;
          if constexpr (std::is_same_v<T, GaussianPulse>) {
            accumulate(target, gaussian_envelope(t, pulse), gaussian_envelope_derivative(t, pulse), pulse.phase_at(t),
                       pulse.phase_rate(t));
          } else {
            // Rectangular edges have no finite derivative; the pulse is treated
            // as flat for derivative purposes.
            accumulate(target, pulse.envelope(t), 0.0, pulse.phase, 0.0);
          }
        },
        p);
  }
  return s;
}

double magnitude_rate(const ComplexDrive& d) {
  const double mag = std::abs(d.value);
  if (mag == 0.0) return 0.0;
  return (std::conj(d.value) * d.rate).real() / mag;
}

double drive_phase(const ComplexDrive& d) {
  return std::abs(d.value) > 0.0 ? std::arg(d.value) : d.first_phase;
}

}  // namespace

double PhaseSweep::offset(double t) const {
  if (stop <= start) return t >= stop ? winding : 0.0;
  const double u = clamp01((t - start) / (stop - start));
  return winding * 0.5 * (1.0 - std::cos(std::numbers::pi * u));
}

double PhaseSweep::rate(double t) const {
  if (stop <= start || t <= start || t >= stop) return 0.0;
  const double span = stop - start;
  const double u = (t - start) / span;
  return winding * 0.5 * std::numbers::pi * std::sin(std::numbers::pi * u) / span;
}

double GaussianPulse::phase_at(double t) const { return phase + (sweep ? sweep->offset(t) : 0.0); }

double GaussianPulse::phase_rate(double t) const { return sweep ? sweep->rate(t) : 0.0; }

double FastPulse::envelope(double t) const { return (t >= start && t < end()) ? amplitude() : 0.0; }

double gaussian_envelope(double t, const GaussianPulse& pulse) {
  if (!(pulse.width > 0.0)) throw InvalidPulseError("gaussian pulse width must be positive");
  const double x = (t - pulse.center) / pulse.width;
  return pulse.amplitude * std::exp(-0.5 * x * x);
}

double gaussian_envelope_derivative(double t, const GaussianPulse& pulse) {
  const double env = gaussian_envelope(t, pulse);
  return -env * (t - pulse.center) / (pulse.width * pulse.width);
}

PulseSequence::PulseSequence(std::vector<Pulse> pulses, double separation, double t_start, double t_end)
    : pulses_(std::move(pulses)), separation_(separation), t_start_(t_start), t_end_(t_end) {
  if (!(t_end_ > t_start_)) throw ConfigError("pulse sequence window is empty");
  const double slack = kWindowSlack * std::max(1.0, t_end_ - t_start_);
  bool have01 = false;
  bool have12 = false;
  bool have_ref = false;
  for (const Pulse& p : pulses_) {
    std::visit(
        [&](const auto& pulse) {
          using T = std::decay_t<decltype(pulse)>;
          double lo = 0.0;
          double hi = 0.0;
          if constexpr (std::is_same_v<T, GaussianPulse>) {
            if (!(pulse.width > 0.0)) throw InvalidPulseError("gaussian pulse width must be positive");
            if (pulse.amplitude < 0.0) throw InvalidPulseError("gaussian pulse amplitude must be non-negative");
            lo = pulse.center - 4.0 * pulse.width;
            hi = pulse.center + 4.0 * pulse.width;
            if (pulse.transition == Transition::T01 && !have_ref) {
              reference_time_ = pulse.center;
              have_ref = true;
            }
          } else {
            if (!(pulse.duration > 0.0)) throw InvalidPulseError("fast pulse duration must be positive");
            lo = pulse.start;
            hi = pulse.end();
          }
          if (lo < t_start_ - slack || hi > t_end_ + slack) {
            throw ConfigError("pulse sequence window does not cover every pulse");
          }
          bool& seen = pulse.transition == Transition::T01 ? have01 : have12;
          double& det = pulse.transition == Transition::T01 ? detuning01_ : detuning12_;
          if (seen && det != pulse.detuning) {
            throw ConfigError("pulses on one transition must share a detuning");
          }
          det = pulse.detuning;
          seen = true;
        },
        p);
  }
  if (!have_ref) reference_time_ = 0.0;
}

double PulseSequence::min_width() const {
  double w = 0.0;
  for (const Pulse& p : pulses_) {
    if (const auto* g = std::get_if<GaussianPulse>(&p)) w = (w == 0.0) ? g->width : std::min(w, g->width);
  }
  return w;
}

std::size_t PulseSequence::gaussian_count() const {
  return static_cast<std::size_t>(std::count_if(pulses_.begin(), pulses_.end(), [](const Pulse& p) {
    return std::holds_alternative<GaussianPulse>(p);
  }));
}

DriveSample PulseSequence::sample(double t) const {
  const DriveState s = evaluate(pulses_, t);
  DriveSample d;
  d.omega01 = std::abs(s.t01.value);
  d.omega12 = std::abs(s.t12.value);
  d.phase01 = drive_phase(s.t01);
  d.phase12 = drive_phase(s.t12);
  d.detuning01 = detuning01_;
  d.detuning12 = detuning12_;
  return d;
}

EnvelopePair PulseSequence::envelopes(double t) const {
  const DriveState s = evaluate(pulses_, t);
  return {std::abs(s.t01.value), std::abs(s.t12.value), magnitude_rate(s.t01), magnitude_rate(s.t12)};
}

namespace {

GaussianPulse make_gaussian(Transition tr, double amplitude, double center, const SequenceParams& p) {
  GaussianPulse g;
  g.transition = tr;
  g.amplitude = amplitude;
  g.center = center;
  g.width = p.sigma;
  if (tr == Transition::T01) {
    g.detuning = p.detuning01;
    g.phase = p.phase01;
  } else {
    g.detuning = p.detuning12;
    g.phase = p.phase12;
    g.sweep = p.phase12_sweep;
  }
  return g;
}

void check_common(const SequenceParams& p) {
  if (!(p.sigma > 0.0)) throw InvalidPulseError("sigma must be positive");
  if (p.omega01 < 0.0 || p.omega12 < 0.0) throw InvalidPulseError("pulse amplitudes must be non-negative");
  if (!(p.truncation_sigmas >= 4.0)) throw ConfigError("window truncation must be at least 4 sigma");
}

}  // namespace

PulseSequence build_two_pulse(const SequenceParams& p) {
  check_common(p);
  const double c01 = -0.5 * p.separation;
  const double c12 = 0.5 * p.separation;
  const double pad = p.truncation_sigmas * p.sigma;
  std::vector<Pulse> pulses{make_gaussian(Transition::T12, p.omega12, c12, p),
                            make_gaussian(Transition::T01, p.omega01, c01, p)};
  return PulseSequence(std::move(pulses), p.separation, std::min(c01, c12) - pad, std::max(c01, c12) + pad);
}

PulseSequence build_sequence(SequenceKind kind, const SequenceParams& p) {
  check_common(p);
  switch (kind) {
    case SequenceKind::Stirap:
      if (p.separation > 0.0) throw ConfigError("STIRAP needs t_s <= 0 (12 pulse first)");
      return build_two_pulse(p);
    case SequenceKind::Intuitive:
      if (p.separation < 0.0) throw ConfigError("intuitive sequence needs t_s >= 0 (01 pulse first)");
      return build_two_pulse(p);
    case SequenceKind::Hybrid: {
      if (p.separation > 0.0) throw ConfigError("hybrid sequence needs t_s <= 0");
      if (!(p.fast_duration > 0.0)) throw InvalidPulseError("fast pulse duration must be positive");
      const PulseSequence pair = build_two_pulse(p);
      FastPulse fast;
      fast.transition = Transition::T01;
      fast.angle = p.theta_fast;
      fast.duration = p.fast_duration;
      fast.start = pair.t_start() - p.fast_duration;
      fast.detuning = p.detuning01;
      fast.phase = p.phase01;
      std::vector<Pulse> pulses{fast};
      pulses.insert(pulses.end(), pair.pulses().begin(), pair.pulses().end());
      return PulseSequence(std::move(pulses), p.separation, fast.start, pair.t_end());
    }
    case SequenceKind::Reversal: {
      const double d = p.reversal_spacing > 0.0 ? p.reversal_spacing : std::abs(p.separation);
      if (!(d > 0.0)) throw ConfigError("reversal needs a positive pulse spacing");
      const double pad = p.truncation_sigmas * p.sigma;
      std::vector<Pulse> pulses{make_gaussian(Transition::T12, p.omega12, -d, p),
                                make_gaussian(Transition::T01, p.omega01, 0.0, p),
                                make_gaussian(Transition::T12, p.omega12, d, p)};
      return PulseSequence(std::move(pulses), -d, -d - pad, d + pad);
    }
  }
  throw ConfigError("unknown sequence kind");
}

double local_adiabaticity(double t, const PulseSequence& seq) {
  const EnvelopePair e = seq.envelopes(t);
  const double denom2 = e.omega01 * e.omega01 + e.omega12 * e.omega12;
  if (denom2 < 1e-24) throw SingularPointError("local adiabaticity undefined: both drives vanish");
  return std::abs(e.d_omega01 * e.omega12 - e.omega01 * e.d_omega12) / std::pow(denom2, 1.5);
}

double rms_area(const PulseSequence& seq, double a, double b, int intervals) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (b - a) / intervals;
  auto f = [&](double t) {
    const EnvelopePair e = seq.envelopes(t);
    return std::hypot(e.omega01, e.omega12);
  };
  double sum = f(a) + f(b);
  for (int k = 1; k < intervals; ++k) sum += f(a + k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

AdiabaticityReport global_adiabaticity_metric(const PulseSequence& seq, FrequencyConvention convention,
                                              double threshold, double area_rel_tol) {
  std::vector<GaussianPulse> gs;
  for (const Pulse& p : seq.pulses()) {
    if (const auto* g = std::get_if<GaussianPulse>(&p)) gs.push_back(*g);
  }
  if (gs.size() != 2 || seq.pulses().size() != 2) {
    throw ConfigError("global adiabaticity metric needs exactly two Gaussian pulses");
  }
  if (gs[0].transition == gs[1].transition) {
    throw ConfigError("global adiabaticity metric needs one pulse per transition");
  }
  const double sigma = std::sqrt(gs[0].width * gs[1].width);
  const double omega = std::sqrt(gs[0].amplitude * gs[1].amplitude);  // rad/ns
  const double omega_conv = convention == FrequencyConvention::Angular ? omega : omega / (2.0 * std::numbers::pi);

  AdiabaticityReport r;
  r.threshold = threshold;
  r.global_metric = 4.0 / std::sqrt(std::numbers::pi) * sigma * omega_conv;
  r.satisfied = r.global_metric > threshold;

  // Whole-line integral: +-12 sigma leaves a tail below 1e-30 of the peak.
  const double lo = std::min(gs[0].center, gs[1].center) - 12.0 * sigma;
  const double hi = std::max(gs[0].center, gs[1].center) + 12.0 * sigma;
  const int n = static_cast<int>(std::ceil((hi - lo) / (sigma / 200.0)));
  r.rms_area = rms_area(seq, lo, hi, n);
  r.area_lower = 2.0 * std::sqrt(std::numbers::pi) * sigma * omega;
  r.area_upper = 2.0 * std::sqrt(2.0 * std::numbers::pi) * sigma * omega;
  r.area_within_bounds =
      r.rms_area >= r.area_lower * (1.0 - area_rel_tol) && r.rms_area <= r.area_upper * (1.0 + area_rel_tol);

  // Local condition over the pulse-on region (rms drive above half its peak);
  // in the tails the quotient diverges with the vanishing drive.
  const int m = 4000;
  const double step = (hi - lo) / m;
  double peak_rms = 0.0;
  for (int k = 0; k <= m; ++k) {
    const EnvelopePair e = seq.envelopes(lo + k * step);
    peak_rms = std::max(peak_rms, std::hypot(e.omega01, e.omega12));
  }
  for (int k = 0; k <= m; ++k) {
    const double t = lo + k * step;
    const EnvelopePair e = seq.envelopes(t);
    if (std::hypot(e.omega01, e.omega12) >= 0.5 * peak_rms && peak_rms > 0.0) {
      r.local_max = std::max(r.local_max, local_adiabaticity(t, seq));
    }
  }
  return r;
}

}  // namespace stirap
