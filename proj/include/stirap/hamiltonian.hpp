#pragma once

#include <optional>
#include <vector>

#include "stirap/core.hpp"
#include "stirap/drive.hpp"

namespace stirap {

/// Quasi-degenerate intermediate level: |1> replaced by |1a>, |1b> placed
/// symmetrically +-delta/2 around it, coupled with branch weights (w_a, w_b).
struct SplitLevel {
  double delta_mhz = 15.0;
  double w_a = 0.70710678118654752;
  double w_b = 0.70710678118654752;
};

/// How the quoted decay/dephasing numbers map to rates in 1/ns.
///  InverseMicroseconds: Gamma [1/ns] = value * 1e-3  (value is 1/T in 1/us)
///  AngularMhz:          Gamma [1/ns] = 2 pi value * 1e-3
enum class RateConvention { InverseMicroseconds, AngularMhz };

struct TransmonParams {
  double f01_tilde_mhz = 5270.0;
  double f12_tilde_mhz = 4820.0;
  double gamma10_mhz = 2.4;
  double gamma21_mhz = 5.2;
  double gamma_phi10_mhz = 0.4;
  double gamma_phi21_mhz = 0.4;
  RateConvention rate_convention = RateConvention::InverseMicroseconds;
  std::optional<SplitLevel> split;

  /// Throws ConfigError on negative rates, non-negative anharmonicity, or a bad split.
  void validate() const;
  /// Quoted value -> rate in 1/ns under `rate_convention`.
  double rate(double quoted) const;
  int dim() const { return split ? 4 : 3; }
};

/// Rotating-frame Hamiltonian, rad/ns:
///   (1/2) [[0, O01 e^{-i p01}, 0], [O01 e^{i p01}, 2 d01, O12 e^{-i p12}], [0, O12 e^{i p12}, 2 (d01 + d12)]]
Eigen::Matrix3cd rotating_hamiltonian3(const DriveSample& s);
ComplexMatrix build_rotating_hamiltonian(const DriveSample& s);

/// Basis {|0>, |1a>, |1b>, |2>}.
Eigen::Matrix4cd split_hamiltonian4(const DriveSample& s, const SplitLevel& split);
ComplexMatrix build_split_hamiltonian(const DriveSample& s, const std::optional<SplitLevel>& split);

/// Adiabatic eigenbasis at two-photon resonance. The relative drive phase is
/// phi = p01 + p12, the combination that enters the dark state of H above.
struct AdiabaticFrame {
  double theta = 0.0;  // tan(theta) = O01 / O12
  double mixing = 0.0;  // Phi
  double phi = 0.0;
  double omega_plus = 0.0;  // eigenvalues of H, rad/ns
  double omega_minus = 0.0;
  double omega_dark = 0.0;
  Ket dark;
  Ket bright;
  Ket plus;
  Ket minus;
};

/// Throws PreconditionError when |d01 + d12| > 1e-12 and UndefinedFrameError
/// when both amplitudes vanish.
AdiabaticFrame adiabatic_frame(const DriveSample& s);

/// Dark state cos(theta)|0> - sin(theta) e^{i phi}|2>.
Ket dark_state(double theta, double phi);

struct CavityParams {
  double f_res_mhz = 6100.0;
  double f_meas_mhz = 6100.0;
  double kappa_mhz = 1.0;
  std::vector<double> g_mhz{50.0, 70.71067811865476, 86.60254037844386};
  double eps_meas_mhz = 0.1;
  double eta = 1.0;
};

/// All quantities in MHz.
struct DispersiveShifts {
  std::vector<double> chi;                    // chi_{j,j+1}
  std::vector<double> lamb_shifted;           // w~_{j,j+1} = w_{j,j+1} + chi_{j,j+1} - chi_{j-1,j}
  std::vector<double> readout_pulls;          // state j: chi_{j-1,j} + chi_01 - chi_{j,j+1}; pull_0 = 0
};

/// chi_{j,j+1} = g^2 / (w_{j,j+1} - w_res) for every transition with a coupling.
/// Throws NonDispersiveError when any |w_{j,j+1} - w_res| < 10 g_{j,j+1}.
DispersiveShifts dispersive_shifts(const CavityParams& cav, const std::vector<double>& bare_transitions_mhz);

/// Bare ladder consistent with the renormalized transitions of `trans`: fixed
/// point of w~ = w + chi - chi_prev, with the third transition extrapolated at
/// constant anharmonicity when the cavity couples it.
std::vector<double> bare_transitions_from(const TransmonParams& trans, const CavityParams& cav);

}  // namespace stirap
