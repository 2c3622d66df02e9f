#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "stirap/error.hpp"
#include "stirap/harness.hpp"

namespace {

using nlohmann::json;

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kNumerical = 3 };

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw stirap::ConfigError("cannot open config file " + path);
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw stirap::ConfigError(std::string("config parse error: ") + e.what());
  }
}

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<int> workers;
  bool no_dissipation = false;
};

stirap::ExperimentConfig resolve(const Options& o, std::optional<stirap::Experiment> expected) {
  json j = read_json(o.config);
  if (!j.is_object()) throw stirap::ConfigError("config must be a JSON object");
  if (expected) {
    const std::string name = stirap::to_string(*expected);
    if (!j.contains("experiment")) {
      j["experiment"] = name;
    } else if (!j["experiment"].is_string() || j["experiment"].get<std::string>() != name) {
      throw stirap::ConfigError("config experiment does not match subcommand (expected " + name + ")");
    }
  }
  stirap::ExperimentConfig cfg = stirap::parse_config(j);
  if (o.out) cfg.output_dir = *o.out;
  if (o.format) cfg.format = *o.format == "json" ? stirap::OutputFormat::Json : stirap::OutputFormat::Csv;
  if (o.workers) cfg.workers = *o.workers;
  if (o.no_dissipation) cfg.dissipation = false;
  return cfg;
}

int run(const Options& o, std::optional<stirap::Experiment> expected) {
  const stirap::ExperimentConfig cfg = resolve(o, expected);
  const stirap::SweepResult result = stirap::run_experiment(cfg);
  const auto files = stirap::emit(result, cfg, cfg.output_dir, cfg.format);
  std::fprintf(stderr, "%s: %zu cells, %zu failed, %.2f s, config %s\n", stirap::to_string(cfg.experiment).c_str(),
               result.cell_count(), result.failed_cells(), result.runtime_s, result.config_hash.c_str());
  for (const auto& f : files) std::printf("%s\n", (std::filesystem::path(cfg.output_dir) / f).string().c_str());
  return result.failed_cells() == 0 ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-level transmon STIRAP simulator"};
  app.set_version_flag("--version", std::string(stirap::kVersion));
  app.require_subcommand(1);

  const std::map<std::string, std::optional<stirap::Experiment>> commands{
      {"run", std::nullopt},
      {"sweep-separation", stirap::Experiment::SeparationSweep},
      {"sweep-detuning", stirap::Experiment::DetuningMap},
      {"hybrid", stirap::Experiment::Hybrid},
      {"reversal", stirap::Experiment::Reversal},
      {"split", stirap::Experiment::SplitMap},
      {"tomography", stirap::Experiment::TomographyTimeline},
      {"berry", stirap::Experiment::Berry},
  };

  Options opts;
  std::string out, format;
  int workers = 0;
  auto add_common = [&](CLI::App* sub, bool full) {
    sub->add_option("--config", opts.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    if (!full) return;
    sub->add_option("--out", out, "output directory");
    sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--workers", workers, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
    sub->add_flag("--no-dissipation", opts.no_dissipation, "drop all relaxation and dephasing");
  };

  std::map<CLI::App*, std::optional<stirap::Experiment>> subs;
  for (const auto& [name, exp] : commands) {
    CLI::App* sub = app.add_subcommand(name, exp ? "run " + stirap::to_string(*exp) : "run the experiment named in the config");
    add_common(sub, true);
    subs[sub] = exp;
  }
  CLI::App* validate = app.add_subcommand("validate-config", "parse and check a config without running it");
  add_common(validate, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (validate->parsed()) {
      const stirap::ExperimentConfig cfg = resolve(opts, std::nullopt);
      std::printf("%s ok, config %s\n", stirap::to_string(cfg.experiment).c_str(), cfg.hash().c_str());
      return kOk;
    }
    for (const auto& [sub, exp] : subs) {
      if (!sub->parsed()) continue;
      if (sub->count("--out")) opts.out = out;
      if (sub->count("--format")) opts.format = format;
      if (sub->count("--workers")) opts.workers = workers;
      return run(opts, exp);
    }
  } catch (const stirap::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const stirap::PreconditionError& e) {
    std::fprintf(stderr, "precondition failed: %s\n", e.what());
    return kConfig;
  } catch (const stirap::InvalidStateError& e) {
    std::fprintf(stderr, "invalid state: %s\n", e.what());
    return kConfig;
  } catch (const stirap::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
  return kOther;
}
