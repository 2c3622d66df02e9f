#include "stirap/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "stirap/error.hpp"

namespace stirap {

Ket basis_ket(int dim, int index) {
  Ket k = Ket::Zero(dim);
  k(index) = 1.0;
  return k;
}

ComplexMatrix transition_operator(int dim, int i, int j) {
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  m(i, j) = 1.0;
  return m;
}

DensityMatrix::DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {}

namespace {

double off_diagonal_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (i != j) s += std::norm(a(i, j));
    }
  }
  return std::sqrt(s);
}

// Zeroes a(p,q) with the unitary G = D R, where D = diag(1, e^{-i arg a_pq})
// makes the pivot real and R is the real symmetric Jacobi rotation.
void jacobi_rotate(ComplexMatrix& a, ComplexMatrix& v, Eigen::Index p, Eigen::Index q) {
  const cplx h = a(p, q);
  const double mag = std::abs(h);
  if (mag == 0.0) return;
  const cplx phase = std::conj(h) / mag;  // e^{-i alpha}
  const double app = a(p, p).real();
  const double aqq = a(q, q).real();
  const double theta = (aqq - app) / (2.0 * mag);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  const cplx gpp = c;
  const cplx gpq = s;
  const cplx gqp = -s * phase;
  const cplx gqq = c * phase;

  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx akp = a(k, p);
    const cplx akq = a(k, q);
    a(k, p) = akp * gpp + akq * gqp;
    a(k, q) = akp * gpq + akq * gqq;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx apk = a(p, k);
    const cplx aqk = a(q, k);
    a(p, k) = std::conj(gpp) * apk + std::conj(gqp) * aqk;
    a(q, k) = std::conj(gpq) * apk + std::conj(gqq) * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  a(p, p) = a(p, p).real();
  a(q, q) = a(q, q).real();

  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx vkp = v(k, p);
    const cplx vkq = v(k, q);
    v(k, p) = vkp * gpp + vkq * gqp;
    v(k, q) = vkp * gpq + vkq * gqq;
  }
}

}  // namespace

HermitianEigen hermitian_eigen(const ComplexMatrix& h, double tol, int max_sweeps) {
  if (h.rows() != h.cols()) throw PreconditionError("hermitian_eigen: matrix is not square");
  const Eigen::Index n = h.rows();
  // Symmetrize so round-off asymmetry in the input cannot stall convergence.
  ComplexMatrix a = 0.5 * (h + h.adjoint());
  ComplexMatrix v = ComplexMatrix::Identity(n, n);

  HermitianEigen out;
  while (off_diagonal_norm(a) > tol && out.sweeps < max_sweeps) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) jacobi_rotate(a, v, p, q);
    }
    ++out.sweeps;
  }
  if (off_diagonal_norm(a) > tol) {
    throw NumericalError("hermitian_eigen: Jacobi iteration did not converge");
  }

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x).real() < a(y, y).real(); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]).real();
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

double hermiticity_deviation(const ComplexMatrix& h) {
  if (h.size() == 0) return 0.0;
  return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

DensityMatrix dm_from_ket(const Ket& psi) {
  const double norm2 = psi.squaredNorm();
  if (std::abs(norm2 - 1.0) > 1e-8) {
    throw InvalidStateError("dm_from_ket: ket is not normalized (|psi|^2 = " + std::to_string(norm2) + ")");
  }
  return DensityMatrix(psi * psi.adjoint());
}

ValidityReport validate_density_matrix(const DensityMatrix& rho, double tol_trace, double tol_pos) {
  ValidityReport r;
  const ComplexMatrix& m = rho.matrix();
  if (m.rows() == 0 || m.rows() != m.cols()) {
    r.hermitian = r.unit_trace = r.positive = false;
    r.trace_deviation = 1.0;
    return r;
  }
  r.hermiticity_deviation = hermiticity_deviation(m);
  r.trace_deviation = std::abs(m.trace() - cplx(1.0, 0.0));
  r.hermitian = r.hermiticity_deviation <= kHermiticityTol;
  r.unit_trace = r.trace_deviation <= tol_trace;
  try {
    r.min_eigenvalue = hermitian_eigen(m).values(0);
    r.positive = r.min_eigenvalue >= -tol_pos;
  } catch (const Error&) {
    r.min_eigenvalue = -std::numeric_limits<double>::infinity();
    r.positive = false;
  }
  return r;
}

std::vector<double> populations(const DensityMatrix& rho) {
  const ValidityReport r = validate_density_matrix(rho);
  if (!r.valid()) {
    throw InvalidStateError("populations: invalid density matrix (trace dev " + std::to_string(r.trace_deviation) +
                            ", min eig " + std::to_string(r.min_eigenvalue) + ")");
  }
  return diagonal_populations(rho.matrix());
}

std::vector<double> diagonal_populations(const ComplexMatrix& rho) {
  std::vector<double> p(static_cast<size_t>(rho.rows()));
  for (Eigen::Index j = 0; j < rho.rows(); ++j) p[static_cast<size_t>(j)] = rho(j, j).real();
  return p;
}

}  // namespace stirap
