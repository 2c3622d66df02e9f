#include "stirap/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

#include "stirap/error.hpp"

namespace stirap {

LindbladSpec build_dissipators(const TransmonParams& params) {
  params.validate();
  const double g10 = params.rate(params.gamma10_mhz);
  const double g21 = params.rate(params.gamma21_mhz);
  const double p10 = 2.0 * params.rate(params.gamma_phi10_mhz);
  const double p21 = 2.0 * params.rate(params.gamma_phi21_mhz);

  LindbladSpec spec;
  spec.dim = params.dim();
  if (!params.split) {
    spec.jumps.push_back({transition_operator(3, 0, 1), g10, "sigma01"});
    spec.jumps.push_back({transition_operator(3, 1, 2), g21, "sigma12"});
    spec.jumps.push_back({transition_operator(3, 1, 1), p10, "dephase1"});
    spec.jumps.push_back({transition_operator(3, 2, 2), p21, "dephase2"});
    return spec;
  }
  const SplitLevel& s = *params.split;
  spec.jumps.push_back({transition_operator(4, 0, 1), g10, "sigma0_1a"});
  spec.jumps.push_back({transition_operator(4, 0, 2), g10, "sigma0_1b"});
  spec.jumps.push_back({transition_operator(4, 1, 3), g21 * s.w_a * s.w_a, "sigma1a_2"});
  spec.jumps.push_back({transition_operator(4, 2, 3), g21 * s.w_b * s.w_b, "sigma1b_2"});
  spec.jumps.push_back({transition_operator(4, 1, 1), p10, "dephase1a"});
  spec.jumps.push_back({transition_operator(4, 2, 2), p10, "dephase1b"});
  spec.jumps.push_back({transition_operator(4, 3, 3), p21, "dephase2"});
  return spec;
}

ComplexMatrix lindblad_rhs(const DensityMatrix& rho, const ComplexMatrix& h, const LindbladSpec& spec) {
  const ComplexMatrix& r = rho.matrix();
  ComplexMatrix out = -kI * (h * r - r * h);
  for (const Jump& j : spec.jumps) {
    if (j.rate == 0.0) continue;
    const ComplexMatrix ldl = j.op.adjoint() * j.op;
    out += j.rate * (j.op * r * j.op.adjoint() - 0.5 * (ldl * r + r * ldl));
  }
  return out;
}

TimeGrid TimeGrid::covering(const PulseSequence& seq, double dt, int sample_stride) {
  return TimeGrid{seq.t_start(), seq.t_end(), dt, sample_stride};
}

long TimeGrid::steps() const {
  const double n = (t_end - t_start) / dt;
  return static_cast<long>(std::ceil(n - 1e-9));
}

double TimeGrid::step_size() const { return (t_end - t_start) / static_cast<double>(steps()); }

void TimeGrid::validate(double min_sigma) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be positive");
  if (!(t_end > t_start)) throw ConfigError("time grid must have t_end > t_start");
  if ((t_end - t_start) / dt < 10.0) throw ConfigError("time grid needs at least 10 steps");
  if (sample_stride < 1) throw ConfigError("sample stride must be >= 1");
  if (min_sigma > 0.0 && dt > min_sigma / 50.0 + 1e-15) {
    throw ConfigError("time step " + std::to_string(dt) + " ns exceeds sigma/50 = " + std::to_string(min_sigma / 50.0) +
                      " ns");
  }
}

ComplexMatrix hamiltonian_at(double t, const PulseSequence& seq, const TransmonParams& params) {
  const DriveSample s = seq.sample(t);
  if (params.split) return split_hamiltonian4(s, *params.split);
  return rotating_hamiltonian3(s);
}

namespace {

template <int N>
using Mat = Eigen::Matrix<cplx, N, N>;
template <int N>
using Vec = Eigen::Matrix<cplx, N, 1>;
template <int N>
using Super = Eigen::Matrix<cplx, N * N, N * N>;

template <int N>
Mat<N> hamiltonian_fixed(double t, const PulseSequence& seq, const TransmonParams& params) {
  if constexpr (N == 3) {
    return rotating_hamiltonian3(seq.sample(t));
  } else {
    return split_hamiltonian4(seq.sample(t), *params.split);
  }
}

// kron(a, b) for the column-major identity vec(A X B) = (B^T kron A) vec(X).
template <int N>
Super<N> kron(const Mat<N>& a, const Mat<N>& b) {
  Super<N> k;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) k.template block<N, N>(i * N, j * N) = a(i, j) * b;
  return k;
}

// Fixed-step RK4 that never straddles a drive discontinuity: a step holding a
// fast-pulse edge is split there, and Hamiltonians at the edge are taken as
// one-sided limits. H at the end of a step is reused at the start of the next.
template <int N>
class Stepper {
 public:
  Stepper(const PulseSequence& seq, const TransmonParams& params, double t0) : seq_(seq), params_(params) {
    for (const Pulse& p : seq.pulses()) {
      if (const auto* f = std::get_if<FastPulse>(&p)) {
        edges_.push_back(f->start);
        edges_.push_back(f->end());
      }
    }
    std::sort(edges_.begin(), edges_.end());
    h0_ = right(t0);
  }

  template <class State, class F>
  State advance(const State& y0, double t0, double t1, F&& f) {
    State y = y0;
    double a = t0;
    Mat<N> ha = h0_;
    for (double e : edges_) {
      if (e <= t0 + kEdge || e >= t1 - kEdge) continue;
      y = rk4(y, a, e, ha, f);
      a = e;
      ha = right(e);
    }
    y = rk4(y, a, t1, ha, f);
    h0_ = near_edge(t1) ? right(t1) : last_;
    return y;
  }

 private:
  static constexpr double kEdge = 1e-9;  // ns

  bool near_edge(double t) const {
    for (double e : edges_)
      if (std::abs(e - t) <= kEdge) return true;
    return false;
  }
  Mat<N> at(double t) const { return hamiltonian_fixed<N>(t, seq_, params_); }
  Mat<N> left(double t) const { return near_edge(t) ? at(t - 2 * kEdge) : at(t); }
  Mat<N> right(double t) const { return near_edge(t) ? at(t + 2 * kEdge) : at(t); }

  template <class State, class F>
  State rk4(const State& y, double a, double b, const Mat<N>& ha, F&& f) {
    const double h = b - a;
    const Mat<N> hm = at(a + 0.5 * h);
    last_ = left(b);
    const State k1 = f(y, ha);
    const State k2 = f(State(y + 0.5 * h * k1), hm);
    const State k3 = f(State(y + 0.5 * h * k2), hm);
    const State k4 = f(State(y + h * k3), last_);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  const PulseSequence& seq_;
  const TransmonParams& params_;
  std::vector<double> edges_;
  Mat<N> h0_;
  Mat<N> last_;
};

template <int N>
Super<N> dissipator_super(const LindbladSpec& spec) {
  Super<N> s = Super<N>::Zero();
  const Mat<N> id = Mat<N>::Identity();
  for (const Jump& j : spec.jumps) {
    if (j.rate == 0.0) continue;
    const Mat<N> l = j.op;
    const Mat<N> ldl = l.adjoint() * l;
    s += j.rate * (kron<N>(l.conjugate(), l) - 0.5 * kron<N>(id, ldl) - 0.5 * kron<N>(ldl.transpose(), id));
  }
  return s;
}

template <int N>
struct Recorder {
  const TimeGrid& grid;
  const EvolveOptions& options;
  SimResult& out;
  long steps;
  int stride;

  void track_peaks(const Vec<N>& diag) {
    for (int j = 0; j < N; ++j) out.peak_populations[j] = std::max(out.peak_populations[j], diag(j).real());
  }

  bool is_sample(long k) const { return k % stride == 0 || k == steps; }

  void record(double t, const Mat<N>& rho, const Vec<N>* ket) {
    out.times.push_back(t);
    std::vector<double> p(N);
    for (int j = 0; j < N; ++j) p[j] = rho(j, j).real();
    out.populations.push_back(std::move(p));
    const double dev = std::abs(rho.trace().real() - 1.0);
    out.trace_deviation.push_back(dev);
    out.trace_drift = std::max(out.trace_drift, dev);
    const ComplexMatrix dyn = rho;
    out.max_hermiticity_deviation = std::max(out.max_hermiticity_deviation, hermiticity_deviation(dyn));
    const double lo = hermitian_eigen(dyn).values.minCoeff();
    out.min_eig = std::min(out.min_eig, lo);
    if (lo < -kRunPositivityTol) {
      throw IntegrationError("density matrix lost positivity (min eigenvalue " + std::to_string(lo) + ")",
                             static_cast<long>(out.times.size() - 1));
    }
    if (options.store_states) {
      out.states.emplace_back(dyn);
      if (ket) out.kets.emplace_back(Ket(*ket));
    }
  }
};

template <int N>
SimResult run_master(const Mat<N>& rho0, const PulseSequence& seq, const TransmonParams& params,
                     const TimeGrid& grid, const LindbladSpec& spec, const EvolveOptions& options) {
  const Super<N> diss = dissipator_super<N>(spec);
  const bool has_diss = !diss.isZero(0.0);
  const long steps = grid.steps();
  const double h = grid.step_size();

  SimResult out;
  out.steps = steps;
  out.peak_populations.assign(N, 0.0);
  out.min_eig = 0.0;
  Recorder<N> rec{grid, options, out, steps, grid.sample_stride};

  auto rhs = [&](const Mat<N>& rho, const Mat<N>& ham) -> Mat<N> {
    Mat<N> d = -kI * (ham * rho - rho * ham);
    if (has_diss) {
      Eigen::Map<const Vec<N * N>> v(rho.data());
      const Vec<N * N> dv = diss * v;
      d += Eigen::Map<const Mat<N>>(dv.data());
    }
    return d;
  };

  Mat<N> rho = rho0;
  rec.track_peaks(rho.diagonal());
  rec.record(grid.t_start, rho, nullptr);
  Stepper<N> stepper(seq, params, grid.t_start);
  for (long k = 1; k <= steps; ++k) {
    const double t = grid.t_start + static_cast<double>(k - 1) * h;
    rho = stepper.advance(rho, t, t + h, rhs);
    rho = 0.5 * (rho + rho.adjoint()).eval();

    const double dev = std::abs(rho.trace().real() - 1.0);
    if (!(dev <= kRunTraceTol)) {
      throw IntegrationError("trace drifted by " + std::to_string(dev) + " at step " + std::to_string(k), k);
    }
    rec.track_peaks(rho.diagonal());
    if (rec.is_sample(k)) rec.record(grid.t_start + static_cast<double>(k) * h, rho, nullptr);
  }
  return out;
}

template <int N>
SimResult run_schroedinger(const Vec<N>& psi0, const PulseSequence& seq, const TransmonParams& params,
                           const TimeGrid& grid, const EvolveOptions& options) {
  const long steps = grid.steps();
  const double h = grid.step_size();

  SimResult out;
  out.steps = steps;
  out.peak_populations.assign(N, 0.0);
  Recorder<N> rec{grid, options, out, steps, grid.sample_stride};

  Vec<N> psi = psi0;
  auto density = [](const Vec<N>& v) -> Mat<N> { return v * v.adjoint(); };
  rec.track_peaks(psi.cwiseAbs2().template cast<cplx>());
  rec.record(grid.t_start, density(psi), &psi);
  Stepper<N> stepper(seq, params, grid.t_start);
  auto rhs = [](const Vec<N>& v, const Mat<N>& ham) -> Vec<N> { return -kI * (ham * v); };
  for (long k = 1; k <= steps; ++k) {
    const double t = grid.t_start + static_cast<double>(k - 1) * h;
    psi = stepper.advance(psi, t, t + h, rhs);

    const double dev = std::abs(psi.squaredNorm() - 1.0);
    if (!(dev <= kRunTraceTol)) {
      throw IntegrationError("norm drifted by " + std::to_string(dev) + " at step " + std::to_string(k), k);
    }
    rec.track_peaks(psi.cwiseAbs2().template cast<cplx>());
    if (rec.is_sample(k)) rec.record(grid.t_start + static_cast<double>(k) * h, density(psi), &psi);
  }
  return out;
}

void check_inputs(int dim, const PulseSequence& seq, const TransmonParams& params, const TimeGrid& grid) {
  params.validate();
  if (dim != params.dim()) {
    throw InvalidStateError("initial state has dimension " + std::to_string(dim) + ", model needs " +
                            std::to_string(params.dim()));
  }
  grid.validate(seq.min_width());
}

}  // namespace

SimResult evolve(const DensityMatrix& rho0, const PulseSequence& seq, const TransmonParams& params,
                 const TimeGrid& grid, bool dissipative, const EvolveOptions& options) {
  check_inputs(rho0.dim(), seq, params, grid);
  const ValidityReport v = validate_density_matrix(rho0);
  if (!v.valid()) throw InvalidStateError("initial density matrix is not a valid state");

  if (!dissipative && std::abs(rho0.purity() - 1.0) < 1e-10) {
    const HermitianEigen e = hermitian_eigen(rho0.matrix());
    const Eigen::Index top = e.values.size() - 1;
    Ket psi = e.vectors.col(top) * std::sqrt(e.values(top));
    psi.normalize();
    return evolve_ket(psi, seq, params, grid, options);
  }

  LindbladSpec spec = build_dissipators(params);
  if (!dissipative) spec.jumps.clear();
  if (params.dim() == 3) return run_master<3>(rho0.matrix(), seq, params, grid, spec, options);
  return run_master<4>(rho0.matrix(), seq, params, grid, spec, options);
}

SimResult evolve_ket(const Ket& psi0, const PulseSequence& seq, const TransmonParams& params, const TimeGrid& grid,
                     const EvolveOptions& options) {
  check_inputs(static_cast<int>(psi0.size()), seq, params, grid);
  if (std::abs(psi0.squaredNorm() - 1.0) > 1e-8) throw InvalidStateError("initial ket is not normalized");
  if (params.dim() == 3) return run_schroedinger<3>(psi0, seq, params, grid, options);
  return run_schroedinger<4>(psi0, seq, params, grid, options);
}

}  // namespace stirap
