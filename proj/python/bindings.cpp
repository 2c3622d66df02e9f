#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>

#include "stirap/error.hpp"
#include "stirap/harness.hpp"
#include "stirap/holonomy.hpp"
#include "stirap/pulse.hpp"
#include "stirap/tomography.hpp"

namespace py = pybind11;
using namespace stirap;

namespace {

// Configs and summaries cross the boundary as JSON text.
nlohmann::json to_json(const py::object& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

py::object from_json(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

ExperimentConfig config_from(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) return parse_config(nlohmann::json::parse(obj.cast<std::string>()));
  return parse_config(to_json(obj));
}

py::dict result_dict(const SweepResult& r) {
  py::list axes;
  for (const auto& a : r.axes) axes.append(py::dict(py::arg("name") = a.name, py::arg("values") = a.values));
  py::list series;
  for (const auto& s : r.series) {
    series.append(py::dict(py::arg("label") = s.label, py::arg("axis_point") = s.axis_point,
                           py::arg("t_ns") = s.t_ns, py::arg("columns") = s.columns, py::arg("values") = s.values));
  }
  return py::dict(py::arg("experiment") = to_string(r.experiment), py::arg("axes") = axes,
                  py::arg("fields") = r.fields, py::arg("cells") = r.cells, py::arg("cell_errors") = r.cell_errors,
                  py::arg("series") = series, py::arg("summary") = from_json(r.summary),
                  py::arg("config_hash") = r.config_hash, py::arg("runtime_s") = r.runtime_s);
}

}  // namespace

PYBIND11_MODULE(_stirap, m) {
  m.attr("__version__") = kVersion;

  auto base = py::register_exception<Error>(m, "StirapError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<PreconditionError>(m, "PreconditionError", base);
  py::register_exception<InvalidStateError>(m, "InvalidStateError", base);
  py::register_exception<NumericalError>(m, "NumericalError", base);

  m.def(
      "default_config",
      [](const std::string& experiment) { return from_json(default_config(experiment_from_string(experiment)).canonical()); },
      py::arg("experiment"), "Fully expanded default config for an experiment name such as TIME_EVOLUTION.");

  m.def(
      "validate_config", [](const py::object& cfg) { return from_json(config_from(cfg).canonical()); },
      py::arg("config"), "Strict parse of a config (dict or JSON text); returns the canonical form.");

  m.def(
      "config_hash", [](const py::object& cfg) { return config_from(cfg).hash(); }, py::arg("config"));

  m.def(
      "run",
      [](const py::object& cfg, int workers) {
        ExperimentConfig c = config_from(cfg);
        if (workers >= 0) c.workers = workers;
        SweepResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c);
        }
        return result_dict(r);
      },
      py::arg("config"), py::arg("workers") = -1, "Runs the experiment described by a config and returns the result.");

  m.def(
      "run_and_emit",
      [](const py::object& cfg, const std::filesystem::path& out_dir) {
        const ExperimentConfig c = config_from(cfg);
        std::vector<std::string> files;
        {
          py::gil_scoped_release release;
          files = emit(run_experiment(c), c, out_dir, c.format);
        }
        return files;
      },
      py::arg("config"), py::arg("out_dir"), "Runs and writes result files plus manifest.json; returns the file names.");

  m.def(
      "adiabaticity",
      [](const py::object& cfg) {
        const ExperimentConfig c = config_from(cfg);
        const AdiabaticityReport a = global_adiabaticity_metric(build_two_pulse(c.pulses));
        return py::dict(py::arg("global_metric") = a.global_metric, py::arg("local_max") = a.local_max,
                        py::arg("rms_area") = a.rms_area, py::arg("area_lower") = a.area_lower,
                        py::arg("area_upper") = a.area_upper);
      },
      py::arg("config"), "Global adiabaticity metric (cyclic convention) of the two-pulse sequence of a config.");

  m.def(
      "berry_phase",
      [](const std::vector<double>& t, const std::vector<double>& theta, const std::vector<double>& phi) {
        if (t.size() != theta.size() || t.size() != phi.size()) throw ConfigError("t, theta and phi differ in length");
        ParameterPath p;
        for (std::size_t k = 0; k < t.size(); ++k) p.samples.push_back({t[k], theta[k], phi[k]});
        return berry_phase(p);
      },
      py::arg("t"), py::arg("theta"), py::arg("phi"), "-int sin^2(theta) dphi along a sampled path.");

  m.def(
      "tomography_round_trip",
      [](const Populations3& p, double noise_rel, std::uint64_t seed) {
        const ReferenceSet refs = synth_reference_traces(CavityParams{}, TransmonParams{});
        const TomographyResult r = reconstruct_populations(mix_traces(p, refs, noise_rel * trace_scale(refs), seed), refs);
        return py::dict(py::arg("p") = r.p, py::arg("residual") = r.residual, py::arg("iterations") = r.iterations);
      },
      py::arg("populations"), py::arg("noise_rel") = 0.0, py::arg("seed") = 0,
      "Mixes the default reference traces with the given populations and reconstructs them.");
}
