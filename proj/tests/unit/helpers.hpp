#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "stirap/harness.hpp"
#include "stirap/lindblad.hpp"
#include "stirap/pulse.hpp"
#include "stirap/units.hpp"

namespace testing {

inline stirap::SequenceParams paper_pulses() {
  stirap::SequenceParams p;
  p.omega01 = stirap::units::angular_from_mhz(43.4);
  p.omega12 = stirap::units::angular_from_mhz(38.2);
  p.sigma = 45.0;
  p.separation = -90.0;
  return p;
}

inline stirap::TransmonParams no_loss() {
  stirap::TransmonParams t;
  t.gamma10_mhz = t.gamma21_mhz = t.gamma_phi10_mhz = t.gamma_phi21_mhz = 0.0;
  return t;
}

inline stirap::SimResult run_from(int level, const stirap::PulseSequence& seq, const stirap::TransmonParams& tp,
                                  double dt, bool dissipative, bool store = false) {
  const stirap::TimeGrid g = stirap::TimeGrid::covering(seq, dt, 10);
  return stirap::evolve(stirap::dm_from_ket(stirap::basis_ket(tp.dim(), level)), seq, tp, g, dissipative,
                        stirap::EvolveOptions{store});
}

// Real roots of a monic cubic x^3 + a x^2 + b x + c with three real roots, ascending.
inline std::vector<double> cubic_roots(double a, double b, double c) {
  const double q = (a * a - 3.0 * b) / 9.0;
  const double r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
  const double th = std::acos(std::clamp(r / std::sqrt(q * q * q), -1.0, 1.0));
  const double s = -2.0 * std::sqrt(q);
  std::vector<double> x{s * std::cos(th / 3.0) - a / 3.0,
                        s * std::cos((th + 2.0 * std::numbers::pi) / 3.0) - a / 3.0,
                        s * std::cos((th - 2.0 * std::numbers::pi) / 3.0) - a / 3.0};
  std::sort(x.begin(), x.end());
  return x;
}

}  // namespace testing
