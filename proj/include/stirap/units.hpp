#pragma once

#include <numbers>

// Internal units: time in ns, frequencies and rates in rad/ns.
// User-facing frequencies are ordinary frequencies f = omega / 2pi in MHz.
namespace stirap::units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// f [MHz] -> omega [rad/ns].
constexpr double angular_from_mhz(double f_mhz) { return kTwoPi * f_mhz * 1e-3; }

/// omega [rad/ns] -> f [MHz].
constexpr double mhz_from_angular(double omega) { return omega / kTwoPi * 1e3; }

/// f [MHz] read as cycles per ns (GHz).
constexpr double cyclic_from_mhz(double f_mhz) { return f_mhz * 1e-3; }

}  // namespace stirap::units
