#include "stirap/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stirap/error.hpp"
#include "stirap/units.hpp"

namespace stirap {

void TransmonParams::validate() const {
  for (double r : {gamma10_mhz, gamma21_mhz, gamma_phi10_mhz, gamma_phi21_mhz}) {
    if (!(r >= 0.0)) throw ConfigError("transmon rates must be non-negative");
  }
  if (!(f01_tilde_mhz > f12_tilde_mhz)) {
    throw ConfigError("transmon needs negative anharmonicity (f01 > f12)");
  }
  if (split) {
    if (!(split->delta_mhz >= 0.0)) throw ConfigError("level splitting must be non-negative");
    const double norm = split->w_a * split->w_a + split->w_b * split->w_b;
    if (std::abs(norm - 1.0) > 1e-9) throw ConfigError("split branch weights must satisfy w_a^2 + w_b^2 = 1");
  }
}

double TransmonParams::rate(double quoted) const {
  return rate_convention == RateConvention::AngularMhz ? units::angular_from_mhz(quoted) : quoted * 1e-3;
}

Eigen::Matrix3cd rotating_hamiltonian3(const DriveSample& s) {
  const cplx c01 = 0.5 * std::polar(s.omega01, s.phase01);
  const cplx c12 = 0.5 * std::polar(s.omega12, s.phase12);
  Eigen::Matrix3cd h = Eigen::Matrix3cd::Zero();
  h(1, 0) = c01;
  h(0, 1) = std::conj(c01);
  h(2, 1) = c12;
  h(1, 2) = std::conj(c12);
  h(1, 1) = s.detuning01;
  h(2, 2) = s.detuning01 + s.detuning12;
  return h;
}

ComplexMatrix build_rotating_hamiltonian(const DriveSample& s) { return rotating_hamiltonian3(s); }

Eigen::Matrix4cd split_hamiltonian4(const DriveSample& s, const SplitLevel& split) {
  const cplx c01 = 0.5 * std::polar(s.omega01, s.phase01);
  const cplx c12 = 0.5 * std::polar(s.omega12, s.phase12);
  const double half_split = 0.5 * units::angular_from_mhz(split.delta_mhz);
  Eigen::Matrix4cd h = Eigen::Matrix4cd::Zero();
  // |1a> = index 1, |1b> = index 2, |2> = index 3.
  h(1, 0) = split.w_a * c01;
  h(2, 0) = split.w_b * c01;
  h(3, 1) = split.w_a * c12;
  h(3, 2) = split.w_b * c12;
  h(0, 1) = std::conj(h(1, 0));
  h(0, 2) = std::conj(h(2, 0));
  h(1, 3) = std::conj(h(3, 1));
  h(2, 3) = std::conj(h(3, 2));
  h(1, 1) = s.detuning01 - half_split;
  h(2, 2) = s.detuning01 + half_split;
  h(3, 3) = s.detuning01 + s.detuning12;
  return h;
}

ComplexMatrix build_split_hamiltonian(const DriveSample& s, const std::optional<SplitLevel>& split) {
  if (!split) throw ConfigError("split Hamiltonian needs a split-level specification");
  return split_hamiltonian4(s, *split);
}

Ket dark_state(double theta, double phi) {
  Ket d = Ket::Zero(3);
  d(0) = std::cos(theta);
  d(2) = -std::sin(theta) * std::polar(1.0, phi);
  return d;
}

AdiabaticFrame adiabatic_frame(const DriveSample& s) {
  if (std::abs(s.detuning01 + s.detuning12) > 1e-12) {
    throw PreconditionError("adiabatic frame needs two-photon resonance (d01 + d12 = 0)");
  }
  const double rms = std::hypot(s.omega01, s.omega12);
  if (rms == 0.0) throw UndefinedFrameError("adiabatic frame undefined: both drive amplitudes vanish");

  AdiabaticFrame f;
  f.theta = std::atan2(s.omega01, s.omega12);
  f.phi = s.phase01 + s.phase12;
  const double d = s.detuning01;
  const double root = std::sqrt(d * d + rms * rms);
  f.mixing = std::atan2(rms, root + d);
  f.omega_plus = 0.5 * (d + root);
  f.omega_minus = 0.5 * (d - root);
  f.omega_dark = 0.0;

  const cplx e_phi = std::polar(1.0, f.phi);
  const cplx e_01 = std::polar(1.0, s.phase01);
  f.dark = dark_state(f.theta, f.phi);
  f.bright = Ket::Zero(3);
  f.bright(0) = std::sin(f.theta);
  f.bright(2) = std::cos(f.theta) * e_phi;
  Ket one = Ket::Zero(3);
  one(1) = e_01;
  f.plus = std::sin(f.mixing) * f.bright + std::cos(f.mixing) * one;
  f.minus = std::cos(f.mixing) * f.bright - std::sin(f.mixing) * one;
  return f;
}

DispersiveShifts dispersive_shifts(const CavityParams& cav, const std::vector<double>& bare) {
  DispersiveShifts out;
  const std::size_t n = std::min(bare.size(), cav.g_mhz.size());
  out.chi.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double delta = bare[j] - cav.f_res_mhz;
    const double g = cav.g_mhz[j];
    if (std::abs(delta) < 10.0 * std::abs(g)) {
      throw NonDispersiveError("transition " + std::to_string(j) + "-" + std::to_string(j + 1) +
                               " is not dispersive (|detuning| < 10 g)");
    }
    out.chi[j] = g * g / delta;
  }
  auto chi = [&](long j) { return (j >= 0 && static_cast<std::size_t>(j) < n) ? out.chi[static_cast<size_t>(j)] : 0.0; };
  out.lamb_shifted.resize(bare.size());
  for (std::size_t j = 0; j < bare.size(); ++j) {
    const long k = static_cast<long>(j);
    out.lamb_shifted[j] = bare[j] + chi(k) - chi(k - 1);
  }
  out.readout_pulls.resize(bare.size() + 1);
  for (std::size_t j = 0; j <= bare.size(); ++j) {
    const long k = static_cast<long>(j);
    out.readout_pulls[j] = chi(k - 1) + chi(0) - chi(k);
  }
  return out;
}

std::vector<double> bare_transitions_from(const TransmonParams& trans, const CavityParams& cav) {
  const std::size_t n = std::max<std::size_t>(2, std::min<std::size_t>(3, cav.g_mhz.size()));
  std::vector<double> bare{trans.f01_tilde_mhz, trans.f12_tilde_mhz};
  auto extend = [&](std::vector<double>& b) {
    b.resize(2);
    if (n == 3) b.push_back(2.0 * b[1] - b[0]);
  };
  extend(bare);
  for (int it = 0; it < 100; ++it) {
    const DispersiveShifts s = dispersive_shifts(cav, bare);
    auto chi = [&](std::size_t j) { return j < s.chi.size() ? s.chi[j] : 0.0; };
    std::vector<double> next{trans.f01_tilde_mhz - chi(0), trans.f12_tilde_mhz - chi(1) + chi(0)};
    extend(next);
    double change = 0.0;
    for (std::size_t j = 0; j < next.size(); ++j) change = std::max(change, std::abs(next[j] - bare[j]));
    bare = std::move(next);
    if (change < 1e-12) break;
  }
  return bare;
}

}  // namespace stirap
