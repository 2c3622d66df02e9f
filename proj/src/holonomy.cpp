#include "stirap/holonomy.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "stirap/error.hpp"

namespace stirap {

void ParameterPath::validate() const {
  if (samples.size() < 2) throw ConfigError("parameter path needs at least two samples");
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const PathSample& s = samples[k];
    if (!(s.theta >= -1e-12 && s.theta <= std::numbers::pi / 2 + 1e-12)) {
      throw ConfigError("path theta outside [0, pi/2] at sample " + std::to_string(k));
    }
    if (k > 0 && !(s.t > samples[k - 1].t)) {
      throw ConfigError("path times must be strictly increasing (sample " + std::to_string(k) + ")");
    }
  }
}

ParameterPath ParameterPath::reversed() const {
  ParameterPath r;
  r.samples.assign(samples.rbegin(), samples.rend());
  for (auto& s : r.samples) s.t = -s.t;
  return r;
}

ParameterPath path_from_sequence(const PulseSequence& seq, double t0, double t1, std::size_t intervals) {
  if (intervals < 1 || !(t1 > t0)) throw ConfigError("path needs t1 > t0 and at least one interval");
  ParameterPath p;
  p.samples.resize(intervals + 1);
  std::vector<double> phis(intervals + 1);
  for (std::size_t k = 0; k <= intervals; ++k) {
    const double t = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(intervals);
    const DriveSample s = seq.sample(t);
    p.samples[k].t = t;
    p.samples[k].theta = std::atan2(s.omega01, s.omega12);
    phis[k] = s.phase01 + s.phase12;
  }
  phis = unwrap(phis);
  for (std::size_t k = 0; k <= intervals; ++k) p.samples[k].phi = phis[k];
  return p;
}

double berry_phase(const ParameterPath& path) {
  path.validate();
  double sum = 0.0;
  for (std::size_t k = 1; k < path.samples.size(); ++k) {
    const PathSample& a = path.samples[k - 1];
    const PathSample& b = path.samples[k];
    const double sa = std::sin(a.theta);
    const double sb = std::sin(b.theta);
    sum += 0.5 * (sa * sa + sb * sb) * (b.phi - a.phi);
  }
  return -sum;
}

double berry_phase(const PulseSequence& seq, double t0, double t1, double tol) {
  std::size_t n = 64;
  double prev = berry_phase(path_from_sequence(seq, t0, t1, n));
  while (n < (std::size_t{1} << 22)) {
    n *= 2;
    const double next = berry_phase(path_from_sequence(seq, t0, t1, n));
    if (std::abs(next - prev) < tol) return next;
    prev = next;
  }
  throw NumericalError("berry phase quadrature did not reach the requested tolerance");
}

std::vector<double> unwrap(const std::vector<double>& phases) {
  std::vector<double> out(phases);
  for (std::size_t k = 1; k < out.size(); ++k) {
    out[k] = out[k - 1] + wrap_phase(phases[k] - out[k - 1]);
  }
  return out;
}

double wrap_phase(double x) {
  const double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(x + std::numbers::pi, two_pi);
  if (r <= 0.0) r += two_pi;
  return r - std::numbers::pi;
}

PhaseResult adiabatic_phase_oracle(const PulseSequence& seq, const TransmonParams& params, const TimeGrid& grid,
                                   double min_metric) {
  if (seq.detuning01() != 0.0 || seq.detuning12() != 0.0) {
    throw PreconditionError("phase oracle needs resonant drives (d01 = d12 = 0)");
  }
  if (params.split) throw PreconditionError("phase oracle needs the three-level model");
  const AdiabaticityReport adiab = global_adiabaticity_metric(seq);
  if (!(adiab.global_metric > min_metric)) {
    throw PreconditionError("phase oracle needs adiabaticity metric > " + std::to_string(min_metric) + ", got " +
                            std::to_string(adiab.global_metric));
  }

  auto dark_at = [&](double t) {
    const AdiabaticFrame f = adiabatic_frame(seq.sample(t));
    return f.dark;
  };
  const Ket psi0 = dark_at(grid.t_start);
  const SimResult run = evolve_ket(psi0, seq, params, grid);

  // int <D|H|D> dt by trapezoid over the stored samples.
  double dyn = 0.0;
  double prev_e = 0.0;
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    const Ket d = dark_at(run.times[k]);
    const double e = d.dot(hamiltonian_at(run.times[k], seq, params) * d).real();
    if (k > 0) dyn += 0.5 * (e + prev_e) * (run.times[k] - run.times[k - 1]);
    prev_e = e;
  }

  const Ket d_f = dark_at(run.times.back());
  const cplx overlap = d_f.dot(run.kets.back());
  PhaseResult r;
  r.metric = adiab.global_metric;
  r.leakage = 1.0 - std::norm(overlap);
  r.dynamical = dyn;
  if (r.leakage > kOracleMaxLeakage) {
    throw NonAdiabaticError("dark-state leakage " + std::to_string(r.leakage) + " exceeds " +
                            std::to_string(kOracleMaxLeakage));
  }
  r.gamma_oracle = wrap_phase(std::arg(overlap) + dyn);
  r.gamma_berry = berry_phase(seq, grid.t_start, grid.t_end);
  r.mismatch = std::abs(wrap_phase(r.gamma_berry - *r.gamma_oracle));
  return r;
}

}  // namespace stirap
