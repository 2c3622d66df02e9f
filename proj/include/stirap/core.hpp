#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace stirap {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using Ket = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

/// |index> in a dim-level Hilbert space.
Ket basis_ket(int dim, int index);

/// |i><j|.
ComplexMatrix transition_operator(int dim, int i, int j);

/// Density operator of a (possibly mixed) state. Construction does not
/// validate; use validate_density_matrix() or populations() for that.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(ComplexMatrix m);

  const ComplexMatrix& matrix() const noexcept { return m_; }
  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  cplx operator()(int i, int j) const { return m_(i, j); }

  double trace_real() const { return m_.trace().real(); }
  double purity() const { return (m_ * m_).trace().real(); }

 private:
  ComplexMatrix m_;
};

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
/// Eigenvalues ascending; column k of `vectors` belongs to `values[k]`.
struct HermitianEigen {
  Eigen::VectorXd values;
  ComplexMatrix vectors;
  int sweeps = 0;
};

/// Iterates until the off-diagonal Frobenius norm drops below `tol`.
HermitianEigen hermitian_eigen(const ComplexMatrix& h, double tol = 1e-12, int max_sweeps = 100);

/// Largest |h - h^dagger| entry.
double hermiticity_deviation(const ComplexMatrix& h);

/// |psi><psi|. Throws InvalidStateError if | |psi|^2 - 1 | > 1e-8.
DensityMatrix dm_from_ket(const Ket& psi);

struct ValidityReport {
  double hermiticity_deviation = 0.0;
  double trace_deviation = 0.0;
  double min_eigenvalue = 0.0;
  bool hermitian = true;
  bool unit_trace = true;
  bool positive = true;

  bool valid() const noexcept { return hermitian && unit_trace && positive; }
};

inline constexpr double kHermiticityTol = 1e-10;
inline constexpr double kTraceTol = 1e-8;
inline constexpr double kPositivityTol = 1e-9;

/// Diagnostic only, never throws.
ValidityReport validate_density_matrix(const DensityMatrix& rho, double tol_trace = kTraceTol,
                                       double tol_pos = kPositivityTol);

/// p_j = Re rho_jj. Throws InvalidStateError for an invalid rho.
std::vector<double> populations(const DensityMatrix& rho);

/// Diagonal read without validation, used inside the integrator hot path.
std::vector<double> diagonal_populations(const ComplexMatrix& rho);

}  // namespace stirap
