#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcm/environment.hpp"

namespace rcm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a run needs; serializable so a persisted config reproduces it.
struct RunConfig {
  int schema = 1;
  nlohmann::json env = {{"dim", 2}, {"p", 0.7}, {"seed", 1}, {"law", {{"kind", "pareto"}, {"a", 3.0}}}};
  std::string experiment = "env-audit";
  std::string preset = "desk";
  nlohmann::json params = nlohmann::json::object();  // overrides on top of the preset
  std::string out_dir = "rcm_out";
  int workers = 1;
  std::uint64_t seed = 1;

  Environment environment() const { return Environment::from_json(env); }
  /// Preset values merged with the overrides.
  nlohmann::json effective_params() const;
  nlohmann::json to_json() const;
};

/// Schema problems as "<json pointer>: message"; empty when valid.
std::vector<std::string> validate_config(const nlohmann::json& j);
/// Throws ConfigError listing every problem.
RunConfig parse_config(const nlohmann::json& j);

const std::vector<std::string>& experiment_names();
const std::vector<std::string>& preset_names();
nlohmann::json preset_params(const std::string& preset, const std::string& experiment);

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ExperimentOutput {
  std::string experiment;
  std::vector<Check> checks;
  std::vector<std::string> files;  // relative to the run directory
  nlohmann::json summary = nlohmann::json::object();
  bool pass() const;
  nlohmann::json to_json() const;
};

/// Runs one experiment (or the whole suite) and writes CSV/JSON/SVG under dir.
ExperimentOutput run_experiment(const RunConfig& cfg, const std::filesystem::path& dir);

/// Re-renders every known SVG from the CSVs found under dir. Returns the written paths.
std::vector<std::filesystem::path> plot_results(const std::filesystem::path& dir);

}  // namespace rcm
