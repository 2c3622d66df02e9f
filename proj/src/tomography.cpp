#include "stirap/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/SVD>

#include "stirap/parallel.hpp"
#include "stirap/rng.hpp"
#include "stirap/units.hpp"

namespace stirap {

namespace {

std::vector<double> tau_grid(const ReadoutModel& r) {
  if (!(r.dtau_ns > 0.0) || !(r.tau_max_ns > 0.0)) throw ConfigError("readout grid needs tau_max > 0 and dtau > 0");
  const long n = static_cast<long>(std::floor(r.tau_max_ns / r.dtau_ns + 1e-9));
  if (n < 2) throw ConfigError("readout grid needs at least 3 samples");
  std::vector<double> taus(static_cast<std::size_t>(n + 1));
  for (long k = 0; k <= n; ++k) taus[static_cast<std::size_t>(k)] = static_cast<double>(k) * r.dtau_ns;
  return taus;
}

// Conditional cavity amplitudes A_k = E[a ; state k] and state probabilities
// P_k, with the transmon relaxing 2 -> 1 -> 0 during readout.
struct ReadoutState {
  std::array<cplx, 3> amp{};
  std::array<double, 3> prob{};
};

ReadoutState readout_rhs(const ReadoutState& s, const std::array<cplx, 3>& decay, cplx drive, double g10,
                         double g21) {
  ReadoutState d;
  for (int k = 0; k < 3; ++k) d.amp[k] = -decay[k] * s.amp[k] + drive * s.prob[k];
  d.amp[2] -= g21 * s.amp[2];
  d.amp[1] += g21 * s.amp[2] - g10 * s.amp[1];
  d.amp[0] += g10 * s.amp[1];
  d.prob[2] = -g21 * s.prob[2];
  d.prob[1] = g21 * s.prob[2] - g10 * s.prob[1];
  d.prob[0] = g10 * s.prob[1];
  return d;
}

ReadoutState axpy(const ReadoutState& s, double h, const ReadoutState& d) {
  ReadoutState r;
  for (int k = 0; k < 3; ++k) {
    r.amp[k] = s.amp[k] + h * d.amp[k];
    r.prob[k] = s.prob[k] + h * d.prob[k];
  }
  return r;
}

void check_grids(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ConfigError("trace tau grids differ in length");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > 1e-9) throw ConfigError("trace tau grids differ");
  }
}

void check_simplex(const Populations3& p) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= -1e-12) || !(v <= 1.0 + 1e-12)) throw InvalidStateError("populations must lie in [0, 1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidStateError("populations must sum to 1");
}

Eigen::MatrixXd design_matrix(const ReferenceSet& refs, double w_ns) {
  const std::size_t n = refs[0].taus.size();
  Eigen::MatrixXd m(2 * n, 3);
  for (int j = 0; j < 3; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double sw = std::exp(-refs[0].taus[i] / w_ns);
      m(static_cast<Eigen::Index>(2 * i), j) = sw * refs[static_cast<std::size_t>(j)].I[i];
      m(static_cast<Eigen::Index>(2 * i + 1), j) = sw * refs[static_cast<std::size_t>(j)].Q[i];
    }
  }
  return m;
}

}  // namespace

ReferenceSet synth_reference_traces(const CavityParams& cav, const TransmonParams& trans, const ReadoutModel& readout) {
  if (!(cav.kappa_mhz > 0.0)) throw ConfigError("cavity linewidth must be positive");
  const std::vector<double> bare = bare_transitions_from(trans, cav);
  const DispersiveShifts shifts = dispersive_shifts(cav, bare);
  const std::vector<double> taus = tau_grid(readout);

  const double kappa = units::angular_from_mhz(cav.kappa_mhz);
  const cplx drive = -kI * units::angular_from_mhz(cav.eps_meas_mhz);
  std::array<cplx, 3> decay{};
  for (int j = 0; j < 3; ++j) {
    const double pull = j < static_cast<int>(shifts.readout_pulls.size()) ? shifts.readout_pulls[static_cast<std::size_t>(j)] : 0.0;
    const double detuning = units::angular_from_mhz(cav.f_res_mhz + pull - cav.f_meas_mhz);
    decay[static_cast<std::size_t>(j)] = kI * detuning + 0.5 * kappa;
  }

  ReferenceSet refs;
  for (int j = 0; j < 3; ++j) {
    ReferenceTrace& r = refs[static_cast<std::size_t>(j)];
    r.state_label = j;
    r.taus = taus;
    r.I.resize(taus.size());
    r.Q.resize(taus.size());
    auto store = [&](std::size_t i, cplx a) {
      r.I[i] = -2.0 * cav.eta * a.real();
      r.Q[i] = -2.0 * cav.eta * a.imag();
    };
    if (!readout.decay_during_readout || j == 0) {
      const cplx z = decay[static_cast<std::size_t>(j)];
      const cplx a_ss = drive / z;
      for (std::size_t i = 0; i < taus.size(); ++i) store(i, a_ss * (1.0 - std::exp(-z * taus[i])));
      continue;
    }
    const double g10 = trans.rate(trans.gamma10_mhz);
    const double g21 = trans.rate(trans.gamma21_mhz);
    ReadoutState s;
    s.prob[static_cast<std::size_t>(j)] = 1.0;
    const int sub = 20;
    const double h = readout.dtau_ns / sub;
    store(0, 0.0);
    for (std::size_t i = 1; i < taus.size(); ++i) {
      for (int k = 0; k < sub; ++k) {
        const ReadoutState k1 = readout_rhs(s, decay, drive, g10, g21);
        const ReadoutState k2 = readout_rhs(axpy(s, 0.5 * h, k1), decay, drive, g10, g21);
        const ReadoutState k3 = readout_rhs(axpy(s, 0.5 * h, k2), decay, drive, g10, g21);
        const ReadoutState k4 = readout_rhs(axpy(s, h, k3), decay, drive, g10, g21);
        for (int m = 0; m < 3; ++m) {
          s.amp[m] += (h / 6.0) * (k1.amp[m] + 2.0 * k2.amp[m] + 2.0 * k3.amp[m] + k4.amp[m]);
          s.prob[m] += (h / 6.0) * (k1.prob[m] + 2.0 * k2.prob[m] + 2.0 * k3.prob[m] + k4.prob[m]);
        }
      }
      store(i, s.amp[0] + s.amp[1] + s.amp[2]);
    }
  }
  return refs;
}

MeasuredTrace mix_traces(const Populations3& p, const ReferenceSet& refs, double noise_std, std::uint64_t seed) {
  check_simplex(p);
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
  check_grids(refs[0].taus, refs[1].taus);
  check_grids(refs[0].taus, refs[2].taus);
  MeasuredTrace m;
  m.taus = refs[0].taus;
  const std::size_t n = m.taus.size();
  m.I.assign(n, 0.0);
  m.Q.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      m.I[i] += p[j] * refs[j].I[i];
      m.Q[i] += p[j] * refs[j].Q[i];
    }
  }
  if (noise_std > 0.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> noise(0.0, noise_std);
    for (std::size_t i = 0; i < n; ++i) {
      m.I[i] += noise(gen);
      m.Q[i] += noise(gen);
    }
  }
  return m;
}

double trace_scale(const ReferenceSet& refs) {
  double s = 0.0;
  for (const auto& r : refs) {
    for (double v : r.I) s = std::max(s, std::abs(v));
    for (double v : r.Q) s = std::max(s, std::abs(v));
  }
  return s;
}

double design_condition(const ReferenceSet& refs, double w_ns) {
  check_grids(refs[0].taus, refs[1].taus);
  check_grids(refs[0].taus, refs[2].taus);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(design_matrix(refs, w_ns));
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

TomographyResult reconstruct_populations(const MeasuredTrace& meas, const ReferenceSet& refs, double w_ns,
                                         const LmSettings& lm) {
  if (!(w_ns > 0.0)) throw ConfigError("weighting width must be positive");
  check_grids(meas.taus, refs[0].taus);
  const double cond = design_condition(refs, w_ns);
  if (!(cond < kMaxDesignCondition)) {
    throw SingularDesignError("reference traces are degenerate (condition number " + std::to_string(cond) + ")");
  }

  const Eigen::MatrixXd d = design_matrix(refs, w_ns);
  const Eigen::Index rows = d.rows();
  Eigen::VectorXd y(rows);
  for (std::size_t i = 0; i < meas.taus.size(); ++i) {
    const double sw = std::exp(-meas.taus[i] / w_ns);
    y(static_cast<Eigen::Index>(2 * i)) = sw * meas.I[i];
    y(static_cast<Eigen::Index>(2 * i + 1)) = sw * meas.Q[i];
  }
  // Model d * (p0, p1, 1 - p0 - p1) = r2 + J x.
  Eigen::MatrixXd jac(rows, 2);
  jac.col(0) = d.col(0) - d.col(2);
  jac.col(1) = d.col(1) - d.col(2);
  const Eigen::VectorXd b = y - d.col(2);
  const Eigen::Matrix2d a = jac.transpose() * jac;
  const Eigen::Vector2d c = jac.transpose() * b;
  auto cost = [&](const Eigen::Vector2d& x) { return 0.5 * (jac * x - b).squaredNorm(); };

  // Bounds n_k . x >= c_k: p0 >= 0, p1 >= 0, p2 = 1 - p0 - p1 >= 0.
  const std::array<Eigen::Vector2d, 3> normals{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), Eigen::Vector2d(-1, -1)};
  const std::array<double, 3> offsets{0.0, 0.0, -1.0};
  auto slack = [&](int k, const Eigen::Vector2d& x) { return normals[k].dot(x) - offsets[k]; };

  Eigen::Vector2d x(1.0 / 3.0, 1.0 / 3.0);
  std::array<bool, 3> active{false, false, false};
  double lambda = lm.lambda_init;
  double f = cost(x);
  TomographyResult out;

  auto finish = [&](int iterations, bool converged) {
    const double p0 = std::clamp(x(0), 0.0, 1.0);
    const double p1 = std::clamp(x(1), 0.0, 1.0 - p0);
    out.p = {p0, p1, 1.0 - p0 - p1};
    Eigen::VectorXd r = y - d * Eigen::Vector3d(out.p[0], out.p[1], out.p[2]);
    double wsum = 0.0;
    for (double t : meas.taus) wsum += 2.0 * std::exp(-2.0 * t / w_ns);
    out.residual = std::sqrt(r.squaredNorm() / wsum);
    out.iterations = iterations;
    out.converged = converged;
    return out;
  };

  // Releases the bound with the most negative multiplier; true if one was released.
  auto release = [&](const Eigen::Vector2d& g) {
    std::vector<int> idx;
    for (int k = 0; k < 3; ++k)
      if (active[k]) idx.push_back(k);
    if (idx.empty()) return false;
    Eigen::MatrixXd n(2, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t m = 0; m < idx.size(); ++m) n.col(static_cast<Eigen::Index>(m)) = normals[idx[m]];
    const Eigen::VectorXd mu = n.colPivHouseholderQr().solve(g);
    Eigen::Index worst = 0;
    const double lowest = mu.minCoeff(&worst);
    if (lowest >= -1e-14) return false;
    active[idx[static_cast<std::size_t>(worst)]] = false;
    return true;
  };

  for (int it = 1; it <= lm.max_iterations; ++it) {
    const Eigen::Vector2d g = a * x - c;
    int n_active = 0;
    for (bool v : active) n_active += v ? 1 : 0;

    Eigen::Vector2d step = Eigen::Vector2d::Zero();
    if (n_active < 2) {
      Eigen::MatrixXd z(2, 2 - n_active);
      if (n_active == 0) {
        z = Eigen::Matrix2d::Identity();
      } else {
        const int k = active[0] ? 0 : (active[1] ? 1 : 2);
        z.col(0) = Eigen::Vector2d(-normals[k](1), normals[k](0)).normalized();
      }
      Eigen::MatrixXd hz = z.transpose() * a * z;
      const Eigen::VectorXd gz = z.transpose() * g;
      Eigen::MatrixXd damped = hz;
      damped.diagonal() += lambda * hz.diagonal();
      step = z * damped.ldlt().solve(-gz);
    }

    double alpha = 1.0;
    int blocking = -1;
    for (int k = 0; k < 3; ++k) {
      if (active[k]) continue;
      const double s = normals[k].dot(step);
      if (s < 0.0) {
        const double a_k = std::max(0.0, slack(k, x)) / -s;
        if (a_k < alpha) {
          alpha = a_k;
          blocking = k;
        }
      }
    }
    const Eigen::Vector2d move = alpha * step;

    if (move.norm() < lm.step_tol) {
      if (blocking >= 0 && step.norm() >= lm.step_tol) {
        active[blocking] = true;
        continue;
      }
      if (release(g)) continue;
      return finish(it, true);
    }

    const Eigen::Vector2d trial = x + move;
    const double f_trial = cost(trial);
    if (f_trial <= f) {
      x = trial;
      f = f_trial;
      if (blocking >= 0) active[blocking] = true;
      lambda = std::max(lambda / lm.lambda_factor, 1e-15);
    } else {
      lambda *= lm.lambda_factor;
    }
  }
  throw ConvergenceError("tomography fit did not converge", finish(lm.max_iterations, false));
}

std::vector<TomographyResult> tomography_timeline(const SimResult& sim, const ReferenceSet& refs, double noise_std,
                                                  double w_ns, std::uint64_t seed, int workers) {
  if (!sim.populations.empty() && sim.populations.front().size() != 3) {
    throw ConfigError("tomography needs a three-level simulation");
  }
  std::vector<TomographyResult> out(sim.populations.size());
  parallel_for(out.size(), workers, [&](std::size_t k) {
    const auto& pk = sim.populations[k];
    Populations3 p{std::max(0.0, pk[0]), std::max(0.0, pk[1]), std::max(0.0, pk[2])};
    const double s = p[0] + p[1] + p[2];
    for (double& v : p) v /= s;
    const MeasuredTrace m = mix_traces(p, refs, noise_std, derive_seed(seed, k));
    out[k] = reconstruct_populations(m, refs, w_ns);
  });
  return out;
}

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trace_csv(std::ostream& os, const MeasuredTrace& meas, int state_label) {
  os << "tau_ns,I,Q,state_label\n";
  for (std::size_t i = 0; i < meas.taus.size(); ++i) {
    os << fmt17(meas.taus[i]) << ',' << fmt17(meas.I[i]) << ',' << fmt17(meas.Q[i]) << ',' << state_label << '\n';
  }
}

void write_traces_csv(std::ostream& os, const ReferenceSet& refs) {
  os << "tau_ns,I,Q,state_label\n";
  for (const auto& r : refs) {
    for (std::size_t i = 0; i < r.taus.size(); ++i) {
      os << fmt17(r.taus[i]) << ',' << fmt17(r.I[i]) << ',' << fmt17(r.Q[i]) << ',' << r.state_label << '\n';
    }
  }
}

ReferenceSet read_traces_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("tau_ns,I,Q,state_label", 0) != 0) {
    throw ConfigError("trace CSV must start with header tau_ns,I,Q,state_label");
  }
  ReferenceSet refs;
  for (int j = 0; j < 3; ++j) refs[static_cast<std::size_t>(j)].state_label = j;
  long row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ss(line);
    double tau = 0, i_val = 0, q_val = 0;
    int label = -1;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(ss >> tau >> c1 >> i_val >> c2 >> q_val >> c3 >> label) || c1 != ',' || c2 != ',' || c3 != ',') {
      throw ConfigError("malformed trace CSV row " + std::to_string(row));
    }
    if (label < 0 || label > 2) throw ConfigError("state_label must be 0, 1 or 2 (row " + std::to_string(row) + ")");
    auto& r = refs[static_cast<std::size_t>(label)];
    r.taus.push_back(tau);
    r.I.push_back(i_val);
    r.Q.push_back(q_val);
  }
  check_grids(refs[0].taus, refs[1].taus);
  check_grids(refs[0].taus, refs[2].taus);
  if (refs[0].taus.empty()) throw ConfigError("trace CSV has no rows");
  return refs;
}

}  // namespace stirap
