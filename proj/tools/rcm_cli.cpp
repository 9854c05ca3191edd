// rcm: run experiments, validate configs, re-render plots.
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include "rcm/environment.hpp"
#include "rcm/experiments.hpp"
#include "rcm/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kResourceError = 3;
constexpr int kTestFailure = 4;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rcm::ConfigError("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    // e.byte is a byte offset; report line and column
    std::ifstream again(path);
    std::string text((std::istreambuf_iterator<char>(again)), std::istreambuf_iterator<char>());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw rcm::ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

json versions() {
  return {{"rcm", "1.0.0"},
          {"config_schema", 1},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", __VERSION__}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-range random conductance model lab"};
  app.require_subcommand(1);

  std::string config_path, experiment, preset, out;
  std::int64_t seed = -1;
  int workers = 0;
  double p = -1.0;
  json params_override;
  std::vector<std::string> sets;

  auto* run = app.add_subcommand("run", "run an experiment");
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--experiment", experiment, "experiment name");
  run->add_option("--preset", preset, "desk or night");
  run->add_option("--seed", seed, "global seed");
  run->add_option("--p", p, "site-open probability");
  run->add_option("--out", out, "output directory (env RCM_OUT_DIR)");
  run->add_option("--workers", workers, "worker threads (env RCM_WORKERS)");
  run->add_option("--set", sets, "parameter override key=json, repeatable");

  auto* validate = app.add_subcommand("validate", "check a config file");
  std::string validate_path;
  validate->add_option("config", validate_path, "JSON config file")->required();

  auto* plot = app.add_subcommand("plot", "re-render SVGs from a result directory");
  std::string plot_dir;
  plot->add_option("dir", plot_dir, "result directory")->required();

  auto* list = app.add_subcommand("list-presets", "print preset parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*list) {
      json j;
      for (const auto& pr : rcm::preset_names())
        for (const auto& ex : rcm::experiment_names()) j[pr][ex] = rcm::preset_params(pr, ex);
      std::cout << j.dump(2) << "\n";
      return kOk;
    }

    if (*validate) {
      const json j = load_json(validate_path);
      const auto errors = rcm::validate_config(j);
      for (const auto& e : errors) std::cerr << validate_path << ": " << e << "\n";
      if (!errors.empty()) return kConfigError;
      std::cout << validate_path << ": ok\n";
      return kOk;
    }

    if (*plot) {
      const auto files = rcm::plot_results(plot_dir);
      if (files.empty()) throw rcm::ConfigError("no plottable CSVs under " + plot_dir);
      for (const auto& f : files) std::cout << f.string() << "\n";
      return kOk;
    }

    // run
    json j = config_path.empty() ? json::object() : load_json(config_path);
    if (!experiment.empty()) j["experiment"] = experiment;
    if (!preset.empty()) j["preset"] = preset;
    if (seed >= 0) j["seed"] = seed;
    if (p >= 0) {
      if (!j.contains("env")) j["env"] = rcm::RunConfig{}.env;
      j["env"]["p"] = p;
    }
    if (const char* e = std::getenv("RCM_OUT_DIR"); e && out.empty()) j["out_dir"] = e;
    if (!out.empty()) j["out_dir"] = out;
    if (const char* e = std::getenv("RCM_WORKERS"); e && workers == 0) {
      try {
        j["workers"] = std::stoi(e);
      } catch (const std::exception&) {
        throw rcm::ConfigError("RCM_WORKERS: not an integer");
      }
    }
    if (workers != 0) j["workers"] = workers;
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw rcm::ConfigError("--set expects key=value, got " + kv);
      json v;
      try {
        v = json::parse(kv.substr(eq + 1));
      } catch (const json::parse_error&) {
        v = kv.substr(eq + 1);
      }
      j["params"][kv.substr(0, eq)] = v;
    }

    const rcm::RunConfig cfg = rcm::parse_config(j);
    const fs::path dir = cfg.out_dir;
    fs::create_directories(dir);
    const auto start = std::chrono::steady_clock::now();
    const auto result = rcm::run_experiment(cfg, dir);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rcm::io::write_json(dir / "config.json", cfg.to_json());
    rcm::io::write_json(dir / "results.json", result.to_json());
    rcm::io::write_json(dir / "manifest.json", {{"config", cfg.to_json()},
                                                {"effective_params", cfg.effective_params()},
                                                {"versions", versions()},
                                                {"wall_time_seconds", wall},
                                                {"pass", result.pass()},
                                                {"files", result.files}});
    for (const auto& c : result.checks)
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  value=" << rcm::io::fmt_double(c.value)
                << " threshold=" << rcm::io::fmt_double(c.threshold) << (c.detail.empty() ? "" : "  " + c.detail)
                << "\n";
    std::cout << "wrote " << dir.string() << " (" << rcm::io::fmt_double(wall) << " s)\n";
    return result.pass() ? kOk : kTestFailure;
  } catch (const rcm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const rcm::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return kResourceError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "resource error: " << e.what() << "\n";
    return kResourceError;
  }
}
