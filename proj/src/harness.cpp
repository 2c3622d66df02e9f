#include "stirap/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "stirap/error.hpp"
#include "stirap/holonomy.hpp"
#include "stirap/lindblad.hpp"
#include "stirap/parallel.hpp"
#include "stirap/units.hpp"

namespace stirap {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::vector<std::pair<Experiment, const char*>> kExperimentNames{
    {Experiment::TimeEvolution, "TIME_EVOLUTION"},   {Experiment::SeparationSweep, "SEPARATION_SWEEP"},
    {Experiment::DetuningMap, "DETUNING_MAP"},       {Experiment::Hybrid, "HYBRID"},
    {Experiment::Reversal, "REVERSAL"},              {Experiment::SplitMap, "SPLIT_MAP"},
    {Experiment::TomographyTimeline, "TOMOGRAPHY_TIMELINE"}, {Experiment::Berry, "BERRY"},
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Strict reader for one JSON object: every key must be consumed.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  void number(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw ConfigError(where(key) + " must be a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(where(key) + " must be finite");
    }
  }
  void integer(const char* key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) throw ConfigError(where(key) + " must be an integer");
      out = v->get<int>();
    }
  }
  void unsigned64(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<long long>() < 0)) {
        throw ConfigError(where(key) + " must be a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }
  void boolean(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(where(key) + " must be true or false");
      out = v->get<bool>();
    }
  }
  std::optional<std::string> string(const char* key) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
      return v->get<std::string>();
    }
    return std::nullopt;
  }
  const json* child(const char* key) { return take(key); }
  std::string where(const std::string& key = "") const { return key.empty() ? path_ : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key " + where(it.key()));
    }
  }

 private:
  const json* take(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> parse_axis_values(const json& j, const std::string& where) {
  if (j.contains("values")) {
    const json& v = j.at("values");
    if (!v.is_array()) throw ConfigError(where + ".values must be an array");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(where + ".values must hold numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  double start = 0, stop = 0, step = 0;
  for (const char* k : {"start", "stop", "step"}) {
    if (!j.contains(k) || !j.at(k).is_number()) throw ConfigError(where + " needs numeric start, stop, step or values");
  }
  start = j.at("start").get<double>();
  stop = j.at("stop").get<double>();
  step = j.at("step").get<double>();
  if (!(step > 0.0)) throw ConfigError(where + ".step must be positive");
  if (stop < start) return {};
  const double n = std::floor((stop - start) / step + 1e-9);
  if (n > 1e6) throw ConfigError(where + " has too many points");
  std::vector<double> out;
  for (long i = 0; i <= static_cast<long>(n); ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

std::vector<std::string> allowed_axes(Experiment e) {
  switch (e) {
    case Experiment::SeparationSweep:
      return {"separation_ns"};
    case Experiment::DetuningMap:
    case Experiment::SplitMap:
      return {"detuning_sum_mhz", "detuning_diff_mhz"};
    case Experiment::Hybrid:
      return {"theta_fast_rad"};
    case Experiment::Berry:
      return {"sigma_ns"};
    default:
      return {};
  }
}

AxisSpec range_axis(const std::string& name, double start, double stop, double step) {
  AxisSpec a{name, {}};
  const long n = std::lround((stop - start) / step);
  for (long i = 0; i <= n; ++i) a.values.push_back(start + static_cast<double>(i) * step);
  return a;
}

const AxisSpec& axis_named(const std::vector<AxisSpec>& axes, const std::string& name) {
  for (const auto& a : axes)
    if (a.name == name) return a;
  throw ConfigError("missing sweep axis " + name);
}

std::size_t axis_index(const std::vector<AxisSpec>& axes, const std::string& name) {
  for (std::size_t i = 0; i < axes.size(); ++i)
    if (axes[i].name == name) return i;
  throw ConfigError("missing sweep axis " + name);
}

}  // namespace

std::string to_string(Experiment e) {
  for (const auto& [k, name] : kExperimentNames)
    if (k == e) return name;
  return "UNKNOWN";
}

Experiment experiment_from_string(const std::string& s) {
  for (const auto& [k, name] : kExperimentNames)
    if (s == name) return k;
  throw ConfigError("unknown experiment '" + s + "'");
}

ExperimentConfig default_config(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  c.pulses.omega01 = units::angular_from_mhz(43.4);
  c.pulses.omega12 = units::angular_from_mhz(38.2);
  c.pulses.sigma = 45.0;
  c.pulses.separation = -90.0;
  switch (e) {
    case Experiment::SeparationSweep:
      c.axes.push_back(range_axis("separation_ns", -200.0, 200.0, 5.0));
      c.map_metric = MapMetric::Peak;
      break;
    case Experiment::DetuningMap:
      c.axes.push_back(range_axis("detuning_sum_mhz", -60.0, 60.0, 1.0));
      c.axes.push_back(range_axis("detuning_diff_mhz", -60.0, 60.0, 1.0));
      c.map_metric = MapMetric::Final;
      break;
    case Experiment::SplitMap:
      c.transmon.split = SplitLevel{};
      c.axes.push_back(range_axis("detuning_sum_mhz", -60.0, 60.0, 1.0));
      c.axes.push_back(range_axis("detuning_diff_mhz", -60.0, 60.0, 1.0));
      c.map_metric = MapMetric::Peak;
      break;
    case Experiment::Hybrid: {
      AxisSpec a{"theta_fast_rad", {}};
      for (int k = 0; k <= 20; ++k) a.values.push_back(std::numbers::pi * k / 20.0);
      c.axes.push_back(a);
      break;
    }
    case Experiment::Berry: {
      const double om = units::angular_from_mhz(std::sqrt(43.4 * 38.2));
      c.pulses.omega01 = om;
      c.pulses.omega12 = om;
      c.pulses.sigma = 110.0;
      c.pulses.separation = 0.0;
      c.pulses.phase12_sweep = PhaseSweep{-110.0, 110.0, std::numbers::pi};
      c.dissipation = false;
      break;
    }
    default:
      break;
  }
  return c;
}

ExperimentConfig parse_config(const json& j) {
  Reader root(j, "config");
  const auto exp_name = root.string("experiment");
  if (!exp_name) throw ConfigError("config.experiment is required");
  ExperimentConfig c = default_config(experiment_from_string(*exp_name));

  if (const json* t = root.child("transmon")) {
    Reader r(*t, "transmon");
    TransmonParams& tp = c.transmon;
    r.number("f01_tilde_mhz", tp.f01_tilde_mhz);
    r.number("f12_tilde_mhz", tp.f12_tilde_mhz);
    r.number("gamma10_mhz", tp.gamma10_mhz);
    r.number("gamma21_mhz", tp.gamma21_mhz);
    r.number("gamma_phi10_mhz", tp.gamma_phi10_mhz);
    r.number("gamma_phi21_mhz", tp.gamma_phi21_mhz);
    if (auto conv = r.string("rate_convention")) {
      if (*conv == "inverse_us") {
        tp.rate_convention = RateConvention::InverseMicroseconds;
      } else if (*conv == "angular_mhz") {
        tp.rate_convention = RateConvention::AngularMhz;
      } else {
        throw ConfigError("transmon.rate_convention must be inverse_us or angular_mhz");
      }
    }
    if (const json* s = r.child("split")) {
      if (s->is_null()) {
        tp.split.reset();
      } else {
        Reader rs(*s, "transmon.split");
        SplitLevel sl = tp.split.value_or(SplitLevel{});
        rs.number("delta_mhz", sl.delta_mhz);
        rs.number("w_a", sl.w_a);
        rs.number("w_b", sl.w_b);
        rs.finish();
        tp.split = sl;
      }
    }
    r.finish();
  }
  c.transmon.validate();

  if (const json* p = root.child("pulses")) {
    Reader r(*p, "pulses");
    SequenceParams& sp = c.pulses;
    double om01 = units::mhz_from_angular(sp.omega01), om12 = units::mhz_from_angular(sp.omega12);
    double d01 = units::mhz_from_angular(sp.detuning01), d12 = units::mhz_from_angular(sp.detuning12);
    r.number("omega01_mhz", om01);
    r.number("omega12_mhz", om12);
    r.number("detuning01_mhz", d01);
    r.number("detuning12_mhz", d12);
    sp.omega01 = units::angular_from_mhz(om01);
    sp.omega12 = units::angular_from_mhz(om12);
    sp.detuning01 = units::angular_from_mhz(d01);
    sp.detuning12 = units::angular_from_mhz(d12);
    r.number("sigma_ns", sp.sigma);
    r.number("separation_ns", sp.separation);
    r.number("phase01_rad", sp.phase01);
    r.number("phase12_rad", sp.phase12);
    r.number("theta_fast_rad", sp.theta_fast);
    r.number("fast_duration_ns", sp.fast_duration);
    r.number("reversal_spacing_ns", sp.reversal_spacing);
    r.number("truncation_sigmas", sp.truncation_sigmas);
    if (const json* s = r.child("phase12_sweep")) {
      if (s->is_null()) {
        sp.phase12_sweep.reset();
      } else {
        Reader rs(*s, "pulses.phase12_sweep");
        PhaseSweep ps = sp.phase12_sweep.value_or(PhaseSweep{});
        rs.number("start_ns", ps.start);
        rs.number("stop_ns", ps.stop);
        rs.number("winding_rad", ps.winding);
        rs.finish();
        if (!(ps.stop > ps.start)) throw ConfigError("pulses.phase12_sweep needs stop_ns > start_ns");
        sp.phase12_sweep = ps;
      }
    }
    r.finish();
    if (!(sp.sigma > 0.0)) throw ConfigError("pulses.sigma_ns must be positive");
    if (sp.omega01 < 0.0 || sp.omega12 < 0.0) throw ConfigError("pulse amplitudes must be non-negative");
  }

  if (const json* g = root.child("grid")) {
    Reader r(*g, "grid");
    r.number("dt_ns", c.dt_ns);
    r.integer("sample_stride", c.sample_stride);
    r.finish();
  }
  if (!(c.dt_ns > 0.0)) throw ConfigError("grid.dt_ns must be positive");
  if (c.sample_stride < 1) throw ConfigError("grid.sample_stride must be >= 1");

  if (const json* a = root.child("axes")) {
    if (!a->is_array()) throw ConfigError("config.axes must be an array");
    const auto allowed = allowed_axes(c.experiment);
    std::vector<AxisSpec> axes;
    for (std::size_t i = 0; i < a->size(); ++i) {
      const json& ax = (*a)[i];
      const std::string where = "axes[" + std::to_string(i) + "]";
      if (!ax.is_object() || !ax.contains("name") || !ax.at("name").is_string()) {
        throw ConfigError(where + " needs a name");
      }
      for (auto it = ax.begin(); it != ax.end(); ++it) {
        static const std::set<std::string> keys{"name", "values", "start", "stop", "step"};
        if (!keys.count(it.key())) throw ConfigError("unknown config key " + where + "." + it.key());
      }
      AxisSpec spec{ax.at("name").get<std::string>(), parse_axis_values(ax, where)};
      if (std::find(allowed.begin(), allowed.end(), spec.name) == allowed.end()) {
        throw ConfigError(where + ": axis '" + spec.name + "' is not valid for " + to_string(c.experiment));
      }
      for (const auto& prev : axes)
        if (prev.name == spec.name) throw ConfigError(where + ": duplicate axis " + spec.name);
      if (spec.values.empty()) throw ConfigError(where + ": sweep axis '" + spec.name + "' is empty");
      axes.push_back(std::move(spec));
    }
    // Axes not named in the config keep their defaults.
    for (const auto& def : c.axes) {
      const bool given = std::any_of(axes.begin(), axes.end(), [&](const AxisSpec& s) { return s.name == def.name; });
      if (!given) axes.push_back(def);
    }
    c.axes = std::move(axes);
  }

  if (auto m = root.string("map_metric")) {
    if (*m == "final") {
      c.map_metric = MapMetric::Final;
    } else if (*m == "peak") {
      c.map_metric = MapMetric::Peak;
    } else {
      throw ConfigError("config.map_metric must be final or peak");
    }
  }

  if (const json* cj = root.child("cavity")) {
    Reader r(*cj, "cavity");
    r.number("f_res_mhz", c.cavity.f_res_mhz);
    r.number("f_meas_mhz", c.cavity.f_meas_mhz);
    r.number("kappa_mhz", c.cavity.kappa_mhz);
    r.number("eps_meas_mhz", c.cavity.eps_meas_mhz);
    r.number("eta", c.cavity.eta);
    if (const json* g = r.child("g_mhz")) {
      if (!g->is_array() || g->empty()) throw ConfigError("cavity.g_mhz must be a non-empty array");
      c.cavity.g_mhz.clear();
      for (const auto& x : *g) {
        if (!x.is_number()) throw ConfigError("cavity.g_mhz must hold numbers");
        c.cavity.g_mhz.push_back(x.get<double>());
      }
    }
    r.finish();
  }

  if (const json* tj = root.child("tomography")) {
    Reader r(*tj, "tomography");
    r.number("noise_rel", c.tomography.noise_rel);
    r.number("w_ns", c.tomography.w_ns);
    r.number("tau_max_ns", c.tomography.readout.tau_max_ns);
    r.number("dtau_ns", c.tomography.readout.dtau_ns);
    r.boolean("decay_during_readout", c.tomography.readout.decay_during_readout);
    r.finish();
  }

  if (const json* bj = root.child("berry")) {
    Reader r(*bj, "berry");
    r.number("min_metric", c.berry_min_metric);
    r.finish();
  }

  root.boolean("dissipation", c.dissipation);
  root.unsigned64("seed", c.seed);
  root.integer("workers", c.workers);
  if (c.workers < 0) throw ConfigError("config.workers must be >= 0");

  if (const json* o = root.child("output")) {
    Reader r(*o, "output");
    if (auto d = r.string("dir")) c.output_dir = *d;
    if (auto f = r.string("format")) {
      if (*f == "csv") {
        c.format = OutputFormat::Csv;
      } else if (*f == "json") {
        c.format = OutputFormat::Json;
      } else {
        throw ConfigError("output.format must be csv or json");
      }
    }
    r.finish();
  }
  root.finish();

  for (const auto& a : c.axes)
    if (a.values.empty()) throw ConfigError("sweep axis '" + a.name + "' is empty");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json ExperimentConfig::canonical() const {
  json j;
  j["experiment"] = to_string(experiment);
  json t;
  t["f01_tilde_mhz"] = transmon.f01_tilde_mhz;
  t["f12_tilde_mhz"] = transmon.f12_tilde_mhz;
  t["gamma10_mhz"] = transmon.gamma10_mhz;
  t["gamma21_mhz"] = transmon.gamma21_mhz;
  t["gamma_phi10_mhz"] = transmon.gamma_phi10_mhz;
  t["gamma_phi21_mhz"] = transmon.gamma_phi21_mhz;
  t["rate_convention"] =
      transmon.rate_convention == RateConvention::InverseMicroseconds ? "inverse_us" : "angular_mhz";
  if (transmon.split) {
    t["split"] = {{"delta_mhz", transmon.split->delta_mhz}, {"w_a", transmon.split->w_a}, {"w_b", transmon.split->w_b}};
  } else {
    t["split"] = nullptr;
  }
  j["transmon"] = t;
  json p;
  p["omega01_mhz"] = units::mhz_from_angular(pulses.omega01);
  p["omega12_mhz"] = units::mhz_from_angular(pulses.omega12);
  p["detuning01_mhz"] = units::mhz_from_angular(pulses.detuning01);
  p["detuning12_mhz"] = units::mhz_from_angular(pulses.detuning12);
  p["sigma_ns"] = pulses.sigma;
  p["separation_ns"] = pulses.separation;
  p["phase01_rad"] = pulses.phase01;
  p["phase12_rad"] = pulses.phase12;
  p["theta_fast_rad"] = pulses.theta_fast;
  p["fast_duration_ns"] = pulses.fast_duration;
  p["reversal_spacing_ns"] = pulses.reversal_spacing;
  p["truncation_sigmas"] = pulses.truncation_sigmas;
  if (pulses.phase12_sweep) {
    p["phase12_sweep"] = {{"start_ns", pulses.phase12_sweep->start},
                          {"stop_ns", pulses.phase12_sweep->stop},
                          {"winding_rad", pulses.phase12_sweep->winding}};
  } else {
    p["phase12_sweep"] = nullptr;
  }
  j["pulses"] = p;
  j["grid"] = {{"dt_ns", dt_ns}, {"sample_stride", sample_stride}};
  json axes = json::array();
  for (const auto& a : this->axes) axes.push_back({{"name", a.name}, {"values", a.values}});
  j["axes"] = axes;
  j["map_metric"] = map_metric == MapMetric::Final ? "final" : "peak";
  j["cavity"] = {{"f_res_mhz", cavity.f_res_mhz}, {"f_meas_mhz", cavity.f_meas_mhz}, {"kappa_mhz", cavity.kappa_mhz},
                 {"g_mhz", cavity.g_mhz},         {"eps_meas_mhz", cavity.eps_meas_mhz}, {"eta", cavity.eta}};
  j["tomography"] = {{"noise_rel", tomography.noise_rel},
                     {"w_ns", tomography.w_ns},
                     {"tau_max_ns", tomography.readout.tau_max_ns},
                     {"dtau_ns", tomography.readout.dtau_ns},
                     {"decay_during_readout", tomography.readout.decay_during_readout}};
  j["berry"] = {{"min_metric", berry_min_metric}};
  j["dissipation"] = dissipation;
  j["seed"] = seed;
  return j;
}


std::string ExperimentConfig::hash() const {
  const std::string s = canonical().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t SweepResult::cell_count() const { return cells.size(); }

std::size_t SweepResult::failed_cells() const {
  return static_cast<std::size_t>(std::count_if(cell_errors.begin(), cell_errors.end(), [](const std::string& e) {
    return !e.empty();
  }));
}

std::size_t SweepResult::field(const std::string& name) const {
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (fields[i] == name) return i;
  throw std::out_of_range("no field " + name);
}

WidthEstimate fwhm(const std::vector<double>& x, const std::vector<double>& y) {
  WidthEstimate w;
  if (x.size() != y.size() || x.size() < 2) return w;
  const auto peak_it = std::max_element(y.begin(), y.end());
  const std::size_t k = static_cast<std::size_t>(peak_it - y.begin());
  const double half = 0.5 * *peak_it;
  auto cross = [&](std::size_t a, std::size_t b) {
    // y[a] >= half > y[b]
    const double f = (y[a] - half) / (y[a] - y[b]);
    return x[a] + f * (x[b] - x[a]);
  };
  double left = x.front();
  bool left_found = false;
  for (std::size_t i = k; i > 0; --i) {
    if (y[i - 1] < half) {
      left = cross(i, i - 1);
      left_found = true;
      break;
    }
  }
  double right = x.back();
  bool right_found = false;
  for (std::size_t i = k; i + 1 < y.size(); ++i) {
    if (y[i + 1] < half) {
      right = cross(i, i + 1);
      right_found = true;
      break;
    }
  }
  w.width = right - left;
  w.lower_bound = !(left_found && right_found);
  return w;
}

int count_blobs(const std::vector<double>& values, std::size_t rows, std::size_t cols, double threshold,
                std::vector<int>* labels) {
  std::vector<int> lab(rows * cols, -1);
  int count = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < rows * cols; ++start) {
    if (!(values[start] > threshold) || lab[start] >= 0) continue;
    lab[start] = count;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      const std::size_t r = c / cols, q = c % cols;
      auto visit = [&](std::size_t n) {
        if (values[n] > threshold && lab[n] < 0) {
          lab[n] = count;
          stack.push_back(n);
        }
      };
      if (r > 0) visit(c - cols);
      if (r + 1 < rows) visit(c + cols);
      if (q > 0) visit(c - 1);
      if (q + 1 < cols) visit(c + 1);
    }
    ++count;
  }
  if (labels) *labels = std::move(lab);
  return count;
}

int count_alternations(const std::vector<double>& y, double tol) {
  int count = 0;
  int last = 0;
  for (std::size_t i = 1; i < y.size(); ++i) {
    const double d = y[i] - y[i - 1];
    const int s = d > tol ? 1 : (d < -tol ? -1 : 0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

namespace {

PulseSequence make_sequence(SequenceKind kind, SequenceParams p) {
  if (p.phase12_sweep) {
    // Sweep times are given relative to the 01 peak.
    SequenceParams bare = p;
    bare.phase12_sweep.reset();
    const double ref = build_sequence(kind, bare).reference_time();
    p.phase12_sweep->start += ref;
    p.phase12_sweep->stop += ref;
  }
  return build_sequence(kind, p);
}

TransmonParams without_rates(TransmonParams tp) {
  tp.gamma10_mhz = tp.gamma21_mhz = tp.gamma_phi10_mhz = tp.gamma_phi21_mhz = 0.0;
  return tp;
}

SimResult simulate(const ExperimentConfig& cfg, const PulseSequence& seq, const TransmonParams& tp, bool dissipative) {
  const TimeGrid grid = TimeGrid::covering(seq, cfg.dt_ns, cfg.sample_stride);
  return evolve(dm_from_ket(basis_ket(tp.dim(), 0)), seq, tp, grid, dissipative, EvolveOptions{false});
}

std::vector<std::string> level_names(int dim) {
  if (dim == 4) return {"p0", "p1a", "p1b", "p2"};
  return {"p0", "p1", "p2"};
}

TimeSeries to_series(const std::string& label, const SimResult& sim, double ref, std::vector<double> point = {}) {
  TimeSeries s;
  s.label = label;
  s.axis_point = std::move(point);
  const int dim = sim.populations.empty() ? 3 : static_cast<int>(sim.populations.front().size());
  s.columns = level_names(dim);
  s.columns.push_back("trace_drift");
  for (std::size_t k = 0; k < sim.times.size(); ++k) {
    s.t_ns.push_back(sim.times[k] - ref);
    std::vector<double> row = sim.populations[k];
    row.push_back(sim.trace_deviation[k]);
    s.values.push_back(std::move(row));
  }
  return s;
}

std::vector<std::string> population_fields(int dim) {
  std::vector<std::string> f;
  for (const auto& n : level_names(dim)) f.push_back("final_" + n);
  for (const auto& n : level_names(dim)) f.push_back("peak_" + n);
  return f;
}

std::vector<double> population_values(const SimResult& sim) {
  std::vector<double> v = sim.final_populations();
  v.insert(v.end(), sim.peak_populations.begin(), sim.peak_populations.end());
  return v;
}

const char* metric_name(MapMetric m) { return m == MapMetric::Final ? "final" : "peak"; }

std::string top_level_field(MapMetric m, int dim) {
  return std::string(metric_name(m)) + "_" + level_names(dim).back();
}

// Evaluates every cell of the axis product; errors are recorded per cell.
template <class F>
void run_cells(SweepResult& out, int workers, std::size_t n_fields, F&& cell) {
  std::size_t n = 1;
  for (const auto& a : out.axes) n *= a.values.size();
  out.cells.assign(n, std::vector<double>(n_fields, kNaN));
  out.cell_errors.assign(n, "");
  parallel_for(n, resolve_workers(workers), [&](std::size_t i) {
    std::vector<double> point(out.axes.size());
    std::size_t rem = i;
    for (std::size_t a = out.axes.size(); a-- > 0;) {
      const std::size_t len = out.axes[a].values.size();
      point[a] = out.axes[a].values[rem % len];
      rem /= len;
    }
    try {
      out.cells[i] = cell(i, point);
    } catch (const Error& e) {
      out.cells[i].assign(n_fields, kNaN);
      out.cell_errors[i] = e.what();
    }
  });
}

SweepResult start_result(const ExperimentConfig& cfg) {
  SweepResult r;
  r.experiment = cfg.experiment;
  r.axes = cfg.axes;
  r.config_hash = cfg.hash();
  r.summary = ordered_json::object();
  r.summary["experiment"] = to_string(cfg.experiment);
  return r;
}

// Grid view of a two-axis map as rows = sum axis, cols = diff axis.
struct MapView {
  const SweepResult& r;
  std::size_t sum_axis, diff_axis;
  std::size_t rows() const { return r.axes[sum_axis].values.size(); }
  std::size_t cols() const { return r.axes[diff_axis].values.size(); }
  std::size_t cell(std::size_t i, std::size_t j) const {
    return sum_axis == 0 ? i * cols() + j : j * rows() + i;
  }
  std::vector<double> grid(const std::string& field) const {
    std::vector<double> g(rows() * cols());
    const std::size_t f = r.field(field);
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j < cols(); ++j) g[i * cols() + j] = r.cells[cell(i, j)][f];
    return g;
  }
};

std::size_t nearest(const std::vector<double>& v, double x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i] - x) < std::abs(v[best] - x)) best = i;
  return best;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

SweepResult run_time_evolution(const ExperimentConfig& cfg) {
  SweepResult out = start_result(cfg);
  const PulseSequence seq = make_sequence(SequenceKind::Stirap, cfg.pulses);
  const double ref = seq.reference_time();
  const SimResult clean = simulate(cfg, seq, without_rates(cfg.transmon), false);
  std::optional<SimResult> diss;
  if (cfg.dissipation) diss = simulate(cfg, seq, cfg.transmon, true);
  const SimResult& main = diss ? *diss : clean;

  if (diss) out.series.push_back(to_series("dissipative", *diss, ref));
  out.series.push_back(to_series("dissipationless", clean, ref));

  // Overlap window: both drives at or above half their peak amplitude.
  double max01 = 0.0, max12 = 0.0;
  std::vector<DriveSample> drive;
  for (double t : main.times) {
    drive.push_back(seq.sample(t));
    max01 = std::max(max01, drive.back().omega01);
    max12 = std::max(max12, drive.back().omega12);
  }
  double p1_overlap = 0.0, p1_between = 0.0;
  double w_lo = kNaN, w_hi = kNaN;
  const double t01 = ref, t12 = ref + cfg.pulses.separation;
  for (std::size_t k = 0; k < main.times.size(); ++k) {
    const double p1 = main.populations[k][1];
    if (drive[k].omega01 >= 0.5 * max01 && drive[k].omega12 >= 0.5 * max12 && max01 > 0 && max12 > 0) {
      p1_overlap = std::max(p1_overlap, p1);
      if (std::isnan(w_lo)) w_lo = main.times[k] - ref;
      w_hi = main.times[k] - ref;
    }
    if (main.times[k] >= std::min(t01, t12) && main.times[k] <= std::max(t01, t12)) {
      p1_between = std::max(p1_between, p1);
    }
  }

  auto& s = out.summary;
  s["peak_p2"] = main.peak_populations[2];
  s["final_p0"] = main.final_populations()[0];
  s["final_p1"] = main.final_populations()[1];
  s["final_p2"] = main.final_populations()[2];
  s["p1_max_overlap"] = p1_overlap;
  s["overlap_window_ns"] = {number_or_null(w_lo), number_or_null(w_hi)};
  s["p1_max_between_peaks"] = p1_between;
  s["trace_drift"] = main.trace_drift;
  s["min_eigenvalue"] = main.min_eig;
  s["dissipationless_peak_p2"] = clean.peak_populations[2];
  s["dissipationless_final_p2"] = clean.final_populations()[2];
  s["dissipationless_trace_drift"] = clean.trace_drift;
  s["dissipative"] = cfg.dissipation;
  return out;
}

SweepResult run_separation_sweep(const ExperimentConfig& cfg) {
  SweepResult out = start_result(cfg);
  const AxisSpec& axis = axis_named(cfg.axes, "separation_ns");
  out.axes = {axis};
  out.fields = population_fields(3);
  std::vector<TimeSeries> series(axis.values.size());
  run_cells(out, cfg.workers, out.fields.size(), [&](std::size_t i, const std::vector<double>& pt) {
    SequenceParams p = cfg.pulses;
    p.separation = pt[0];
    const PulseSequence seq = build_two_pulse(p);
    const SimResult sim = simulate(cfg, seq, cfg.dissipation ? cfg.transmon : without_rates(cfg.transmon),
                                   cfg.dissipation);
    series[i] = to_series("separation", sim, seq.reference_time(), pt);
    return population_values(sim);
  });
  for (auto& s : series)
    if (!s.t_ns.empty()) out.series.push_back(std::move(s));

  const std::size_t f = out.field(top_level_field(cfg.map_metric, 3));
  std::vector<double> ts, m;
  for (std::size_t i = 0; i < out.cells.size(); ++i) {
    if (!out.cell_errors[i].empty()) continue;
    ts.push_back(axis.values[i]);
    m.push_back(out.cells[i][f]);
  }
  auto& s = out.summary;
  s["metric"] = top_level_field(cfg.map_metric, 3);
  if (m.empty()) return out;
  const std::size_t best = static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin());
  s["argmax_separation_ns"] = ts[best];
  s["max_p2"] = m[best];
  double plateau_min = kNaN;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] >= -120.0 - 1e-9 && ts[i] <= -80.0 + 1e-9) {
      const double r = m[i] / m[best];
      plateau_min = std::isnan(plateau_min) ? r : std::min(plateau_min, r);
    }
  }
  s["plateau_min_ratio"] = number_or_null(plateau_min);
  std::vector<double> positive;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (ts[i] > 0.0 && ts[i] <= 150.0 + 1e-9) positive.push_back(m[i]);
  s["positive_alternations"] = count_alternations(positive);
  s["failed_cells"] = out.failed_cells();
  return out;
}

namespace {

SweepResult detuning_plane(const ExperimentConfig& cfg, const TransmonParams& tp) {
  SweepResult out = start_result(cfg);
  const std::size_t sum_ax = axis_index(cfg.axes, "detuning_sum_mhz");
  const std::size_t diff_ax = axis_index(cfg.axes, "detuning_diff_mhz");
  if (cfg.axes.size() != 2) throw ConfigError("detuning maps need exactly the sum and difference axes");
  out.fields = population_fields(tp.dim());
  const bool dissipative = cfg.dissipation;
  const TransmonParams model = dissipative ? tp : without_rates(tp);
  run_cells(out, cfg.workers, out.fields.size(), [&](std::size_t, const std::vector<double>& pt) {
    SequenceParams p = cfg.pulses;
    const double sum = pt[sum_ax], diff = pt[diff_ax];
    p.detuning01 = units::angular_from_mhz(0.5 * (sum + diff));
    p.detuning12 = units::angular_from_mhz(0.5 * (sum - diff));
    const PulseSequence seq = make_sequence(SequenceKind::Stirap, p);
    return population_values(simulate(cfg, seq, model, dissipative));
  });
  return out;
}

}  // namespace

SweepResult run_detuning_map(const ExperimentConfig& cfg) {
  if (cfg.transmon.split) throw ConfigError("DETUNING_MAP uses the three-level model; use SPLIT_MAP for a split level");
  SweepResult out = detuning_plane(cfg, cfg.transmon);
  const MapView view{out, axis_index(out.axes, "detuning_sum_mhz"), axis_index(out.axes, "detuning_diff_mhz")};
  const std::string metric = top_level_field(cfg.map_metric, 3);
  const std::vector<double> g = view.grid(metric);
  const auto& sums = out.axes[view.sum_axis].values;
  const auto& diffs = out.axes[view.diff_axis].values;
  const std::size_t i0 = nearest(sums, 0.0), j0 = nearest(diffs, 0.0);

  std::vector<double> sum_profile(view.rows()), diff_profile(view.cols());
  for (std::size_t i = 0; i < view.rows(); ++i) sum_profile[i] = g[i * view.cols() + j0];
  for (std::size_t j = 0; j < view.cols(); ++j) diff_profile[j] = g[i0 * view.cols() + j];
  const WidthEstimate ws = fwhm(sums, sum_profile);
  const WidthEstimate wd = fwhm(diffs, diff_profile);

  double line_max = *std::max_element(diff_profile.begin(), diff_profile.end());
  double robust_min = line_max;
  for (std::size_t j = 0; j < view.cols(); ++j)
    if (std::abs(diffs[j]) <= 10.0 + 1e-9) robust_min = std::min(robust_min, diff_profile[j]);

  // Mirror diagnostics over cells whose reflected coordinates are on the grid.
  double mirror_point = 0.0, mirror_diff = 0.0;
  for (std::size_t i = 0; i < view.rows(); ++i) {
    for (std::size_t j = 0; j < view.cols(); ++j) {
      const std::size_t ii = nearest(sums, -sums[i]), jj = nearest(diffs, -diffs[j]);
      if (std::abs(sums[ii] + sums[i]) > 1e-9 || std::abs(diffs[jj] + diffs[j]) > 1e-9) continue;
      const double v = g[i * view.cols() + j];
      mirror_point = std::max(mirror_point, std::abs(v - g[ii * view.cols() + jj]));
      mirror_diff = std::max(mirror_diff, std::abs(v - g[i * view.cols() + jj]));
    }
  }

  auto& s = out.summary;
  s["metric"] = metric;
  s["fwhm_sum_mhz"] = ws.width;
  s["fwhm_sum_lower_bound"] = ws.lower_bound;
  s["fwhm_diff_mhz"] = wd.width;
  s["fwhm_diff_lower_bound"] = wd.lower_bound;
  s["fwhm_ratio"] = wd.width > 0 ? ws.width / wd.width : kNaN;
  s["origin_final_p2"] = out.value(view.cell(i0, j0), "final_p2");
  s["origin_peak_p2"] = out.value(view.cell(i0, j0), "peak_p2");
  s["resonant_line_min_ratio_within_10mhz"] = line_max > 0 ? robust_min / line_max : kNaN;
  s["mirror_point_max_abs"] = mirror_point;
  s["mirror_diff_axis_max_abs"] = mirror_diff;
  s["failed_cells"] = out.failed_cells();
  return out;
}

SweepResult run_split_map(const ExperimentConfig& cfg) {
  if (!cfg.transmon.split) throw ConfigError("SPLIT_MAP needs transmon.split");
  SweepResult out = detuning_plane(cfg, cfg.transmon);
  const MapView view{out, axis_index(out.axes, "detuning_sum_mhz"), axis_index(out.axes, "detuning_diff_mhz")};
  const std::string metric = top_level_field(cfg.map_metric, 4);
  const std::vector<double> g = view.grid(metric);
  std::vector<int> labels;
  const int blobs = count_blobs(g, view.rows(), view.cols(), 0.5, &labels);
  std::vector<double> blob_peak(static_cast<std::size_t>(blobs), 0.0);
  for (std::size_t c = 0; c < g.size(); ++c)
    if (labels[c] >= 0) blob_peak[static_cast<std::size_t>(labels[c])] = std::max(blob_peak[static_cast<std::size_t>(labels[c])], g[c]);

  const auto& sums = out.axes[view.sum_axis].values;
  const auto& diffs = out.axes[view.diff_axis].values;
  const std::size_t i0 = nearest(sums, 0.0), j0 = nearest(diffs, 0.0);
  const double mid = g[i0 * view.cols() + j0];
  double line_peak = 0.0;
  for (std::size_t j = 0; j < view.cols(); ++j) line_peak = std::max(line_peak, g[i0 * view.cols() + j]);

  auto& s = out.summary;
  s["metric"] = metric;
  s["threshold"] = 0.5;
  s["blob_count"] = blobs;
  s["blob_peaks"] = blob_peak;
  s["midpoint_p2"] = mid;
  s["resonant_line_peak_p2"] = line_peak;
  s["midpoint_dip"] = line_peak - mid;
  s["failed_cells"] = out.failed_cells();
  return out;
}

SweepResult run_hybrid(const ExperimentConfig& cfg) {
  SweepResult out = start_result(cfg);
  const AxisSpec& axis = axis_named(cfg.axes, "theta_fast_rad");
  out.axes = {axis};
  out.fields = population_fields(3);
  out.fields.push_back("late_p1_alternations");
  std::vector<TimeSeries> series(axis.values.size());
  const TransmonParams model = cfg.dissipation ? cfg.transmon : without_rates(cfg.transmon);
  run_cells(out, cfg.workers, out.fields.size(), [&](std::size_t i, const std::vector<double>& pt) {
    SequenceParams p = cfg.pulses;
    p.theta_fast = pt[0];
    const PulseSequence seq = make_sequence(SequenceKind::Hybrid, p);
    const SimResult sim = simulate(cfg, seq, model, cfg.dissipation);
    series[i] = to_series("hybrid", sim, seq.reference_time(), pt);
    // p1 after the 01 peak, where the last pulse drives 0-1 Rabi cycling.
    std::vector<double> late;
    for (std::size_t k = 0; k < sim.times.size(); ++k)
      if (sim.times[k] >= seq.reference_time()) late.push_back(sim.populations[k][1]);
    std::vector<double> v = population_values(sim);
    v.push_back(count_alternations(late, 1e-6));
    return v;
  });
  for (auto& s : series)
    if (!s.t_ns.empty()) out.series.push_back(std::move(s));

  std::vector<double> p2;
  for (std::size_t i = 0; i < out.cells.size(); ++i) p2.push_back(out.value(i, "final_p2"));
  bool monotone = true;
  for (std::size_t i = 1; i < p2.size(); ++i)
    if (p2[i] > p2[i - 1] + 1e-6) monotone = false;
  auto& s = out.summary;
  s["final_p2"] = p2;
  s["final_p2_non_increasing"] = monotone;
  s["failed_cells"] = out.failed_cells();
  return out;
}

SweepResult run_reversal(const ExperimentConfig& cfg) {
  SweepResult out = start_result(cfg);
  const PulseSequence seq = make_sequence(SequenceKind::Reversal, cfg.pulses);
  const double ref = seq.reference_time();
  const SimResult clean = simulate(cfg, seq, without_rates(cfg.transmon), false);
  std::optional<SimResult> diss;
  if (cfg.dissipation) diss = simulate(cfg, seq, cfg.transmon, true);
  const SimResult& main = diss ? *diss : clean;
  if (diss) out.series.push_back(to_series("dissipative", *diss, ref));
  out.series.push_back(to_series("dissipationless", clean, ref));

  std::size_t k_peak = 0;
  for (std::size_t k = 0; k < main.times.size(); ++k)
    if (main.populations[k][2] > main.populations[k_peak][2]) k_peak = k;
  auto& s = out.summary;
  s["max_p2"] = main.peak_populations[2];
  s["t_max_p2_ns"] = main.times[k_peak] - ref;
  s["final_p0"] = main.final_populations()[0];
  s["final_p1"] = main.final_populations()[1];
  s["final_p2"] = main.final_populations()[2];
  s["dissipationless_final_p0"] = clean.final_populations()[0];
  s["dissipationless_max_p2"] = clean.peak_populations[2];
  s["dissipative"] = cfg.dissipation;
  return out;
}

SweepResult run_tomography_timeline(const ExperimentConfig& cfg) {
  SweepResult out = start_result(cfg);
  if (cfg.transmon.split) throw ConfigError("tomography needs the three-level model");
  const PulseSequence seq = make_sequence(SequenceKind::Stirap, cfg.pulses);
  const double ref = seq.reference_time();
  const SimResult sim =
      simulate(cfg, seq, cfg.dissipation ? cfg.transmon : without_rates(cfg.transmon), cfg.dissipation);
  const ReferenceSet refs = synth_reference_traces(cfg.cavity, cfg.transmon, cfg.tomography.readout);
  const double noise = cfg.tomography.noise_rel * trace_scale(refs);
  const auto rec = tomography_timeline(sim, refs, noise, cfg.tomography.w_ns, cfg.seed, resolve_workers(cfg.workers));

  TimeSeries ts;
  ts.label = "timeline";
  ts.columns = {"p0", "p1", "p2", "p0_hat", "p1_hat", "p2_hat", "residual"};
  double max_err = 0.0, peak_true = 0.0, peak_hat = 0.0;
  for (std::size_t k = 0; k < sim.times.size(); ++k) {
    ts.t_ns.push_back(sim.times[k] - ref);
    const auto& p = sim.populations[k];
    ts.values.push_back({p[0], p[1], p[2], rec[k].p[0], rec[k].p[1], rec[k].p[2], rec[k].residual});
    for (int j = 0; j < 3; ++j) max_err = std::max(max_err, std::abs(rec[k].p[j] - p[j]));
    peak_true = std::max(peak_true, p[2]);
    peak_hat = std::max(peak_hat, rec[k].p[2]);
  }
  out.series.push_back(std::move(ts));

  TimeSeries rt;
  rt.label = "reference_traces";
  rt.columns = {"I0", "Q0", "I1", "Q1", "I2", "Q2"};
  rt.t_ns = refs[0].taus;
  for (std::size_t i = 0; i < refs[0].taus.size(); ++i) {
    rt.values.push_back({refs[0].I[i], refs[0].Q[i], refs[1].I[i], refs[1].Q[i], refs[2].I[i], refs[2].Q[i]});
  }
  out.series.push_back(std::move(rt));

  auto& s = out.summary;
  s["noise_std"] = noise;
  s["trace_scale"] = trace_scale(refs);
  s["design_condition"] = design_condition(refs, cfg.tomography.w_ns);
  s["max_abs_error"] = max_err;
  s["peak_p2_true"] = peak_true;
  s["peak_p2_reconstructed"] = peak_hat;
  return out;
}

SweepResult run_berry(const ExperimentConfig& cfg) {
  SweepResult out = start_result(cfg);
  if (cfg.axes.empty()) {
    out.axes = {AxisSpec{"sigma_ns", {cfg.pulses.sigma}}};
  } else {
    out.axes = {axis_named(cfg.axes, "sigma_ns")};
  }
  out.fields = {"metric", "gamma_berry", "gamma_oracle", "mismatch", "leakage"};
  const TransmonParams model = without_rates(cfg.transmon);
  run_cells(out, cfg.workers, out.fields.size(), [&](std::size_t, const std::vector<double>& pt) {
    SequenceParams p = cfg.pulses;
    // The phase sweep and separation scale with sigma.
    const double scale = pt[0] / cfg.pulses.sigma;
    p.sigma = pt[0];
    p.separation *= scale;
    if (p.phase12_sweep) {
      p.phase12_sweep->start *= scale;
      p.phase12_sweep->stop *= scale;
    }
    const PulseSequence seq = make_sequence(SequenceKind::Stirap, p);
    const TimeGrid grid = TimeGrid::covering(seq, cfg.dt_ns, cfg.sample_stride);
    const PhaseResult r = adiabatic_phase_oracle(seq, model, grid, cfg.berry_min_metric);
    return std::vector<double>{r.metric, r.gamma_berry, *r.gamma_oracle, r.mismatch, r.leakage};
  });
  double worst = 0.0;
  for (std::size_t i = 0; i < out.cells.size(); ++i)
    if (out.cell_errors[i].empty()) worst = std::max(worst, out.value(i, "mismatch"));
  out.summary["max_mismatch"] = worst;
  out.summary["failed_cells"] = out.failed_cells();
  return out;
}

SweepResult run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  SweepResult r;
  switch (cfg.experiment) {
    case Experiment::TimeEvolution:
      r = run_time_evolution(cfg);
      break;
    case Experiment::SeparationSweep:
      r = run_separation_sweep(cfg);
      break;
    case Experiment::DetuningMap:
      r = run_detuning_map(cfg);
      break;
    case Experiment::Hybrid:
      r = run_hybrid(cfg);
      break;
    case Experiment::Reversal:
      r = run_reversal(cfg);
      break;
    case Experiment::SplitMap:
      r = run_split_map(cfg);
      break;
    case Experiment::TomographyTimeline:
      r = run_tomography_timeline(cfg);
      break;
    case Experiment::Berry:
      r = run_berry(cfg);
      break;
  }
  r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string fnv_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << content;
  if (!os) throw Error("write failed for " + path.string());
}

std::string map_csv(const SweepResult& r) {
  std::ostringstream os;
  for (const auto& a : r.axes) os << a.name << ',';
  for (const auto& f : r.fields) os << f << ',';
  os << "status\n";
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    std::size_t rem = i;
    std::vector<double> pt(r.axes.size());
    for (std::size_t a = r.axes.size(); a-- > 0;) {
      pt[a] = r.axes[a].values[rem % r.axes[a].values.size()];
      rem /= r.axes[a].values.size();
    }
    for (double v : pt) os << num(v) << ',';
    for (double v : r.cells[i]) os << num(v) << ',';
    os << (r.cell_errors[i].empty() ? "ok" : "failed") << '\n';
  }
  return os.str();
}

std::string series_csv(const std::vector<const TimeSeries*>& group, const std::vector<AxisSpec>& axes) {
  std::ostringstream os;
  const bool with_axes = !group.front()->axis_point.empty();
  if (with_axes)
    for (const auto& a : axes) os << a.name << ',';
  os << "t_ns";
  for (const auto& c : group.front()->columns) os << ',' << c;
  os << '\n';
  for (const TimeSeries* s : group) {
    for (std::size_t k = 0; k < s->t_ns.size(); ++k) {
      if (with_axes)
        for (double v : s->axis_point) os << num(v) << ',';
      os << num(s->t_ns[k]);
      for (double v : s->values[k]) os << ',' << num(v);
      os << '\n';
    }
  }
  return os.str();
}

std::string reference_csv(const TimeSeries& s) {
  std::ostringstream os;
  os << "tau_ns,I,Q,state_label\n";
  for (int j = 0; j < 3; ++j) {
    for (std::size_t k = 0; k < s.t_ns.size(); ++k) {
      os << num(s.t_ns[k]) << ',' << num(s.values[k][2 * j]) << ',' << num(s.values[k][2 * j + 1]) << ',' << j << '\n';
    }
  }
  return os.str();
}

json series_json(const TimeSeries& s) {
  json j;
  j["label"] = s.label;
  j["axis_point"] = s.axis_point;
  j["columns"] = s.columns;
  j["t_ns"] = s.t_ns;
  json rows = json::array();
  for (const auto& row : s.values) {
    json r = json::array();
    for (double v : row) r.push_back(number_or_null(v));
    rows.push_back(r);
  }
  j["values"] = rows;
  return j;
}

}  // namespace

std::vector<std::string> emit(const SweepResult& result, const ExperimentConfig& cfg, const std::filesystem::path& dir,
                              OutputFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  const std::string stem = lower(to_string(result.experiment));
  std::vector<std::pair<std::string, std::string>> files;

  json metadata;
  metadata["experiment"] = to_string(result.experiment);
  metadata["config_hash"] = result.config_hash;
  metadata["version"] = kVersion;
  metadata["complete"] = result.failed_cells() == 0;

  if (format == OutputFormat::Csv) {
    if (!result.fields.empty()) files.emplace_back(stem + "_map.csv", map_csv(result));
    std::vector<std::string> order;
    std::vector<std::vector<const TimeSeries*>> groups;
    for (const auto& s : result.series) {
      auto it = std::find(order.begin(), order.end(), s.label);
      if (it == order.end()) {
        order.push_back(s.label);
        groups.push_back({&s});
      } else {
        groups[static_cast<std::size_t>(it - order.begin())].push_back(&s);
      }
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (order[g] == "reference_traces") {
        files.emplace_back(stem + "_reference_traces.csv", reference_csv(*groups[g].front()));
      } else {
        files.emplace_back(stem + "_" + order[g] + ".csv", series_csv(groups[g], result.axes));
      }
    }
    ordered_json summary;
    summary["metadata"] = metadata;
    summary["summary"] = result.summary;
    files.emplace_back(stem + "_summary.json", summary.dump(2) + "\n");
  } else {
    ordered_json j;
    j["metadata"] = metadata;
    json axes = json::object();
    for (const auto& a : result.axes) axes[a.name] = a.values;
    j["axes"] = axes;
    j["fields"] = result.fields;
    json data = json::array();
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
      json row = json::array();
      for (double v : result.cells[i]) row.push_back(number_or_null(v));
      json cell{{"values", row}};
      if (!result.cell_errors[i].empty()) cell["error"] = result.cell_errors[i];
      data.push_back(cell);
    }
    j["data"] = data;
    json series = json::array();
    for (const auto& s : result.series) series.push_back(series_json(s));
    j["series"] = series;
    j["summary"] = result.summary;
    files.emplace_back(stem + ".json", j.dump(2) + "\n");
  }

  ordered_json manifest;
  manifest["experiment"] = to_string(result.experiment);
  manifest["config_hash"] = result.config_hash;
  manifest["version"] = kVersion;
  manifest["format"] = format == OutputFormat::Csv ? "csv" : "json";
  manifest["config"] = cfg.canonical();
  json listing = json::array();
  for (const auto& [name, content] : files) listing.push_back({{"name", name}, {"fnv1a64", fnv_hex(content)}});
  manifest["files"] = listing;

  std::vector<std::string> names;
  for (const auto& [name, content] : files) {
    write_file(dir / name, content);
    names.push_back(name);
  }
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  names.push_back("manifest.json");
  return names;
}

}  // namespace stirap
