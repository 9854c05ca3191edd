#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rcm/experiments.hpp"
#include "rcm/io.hpp"

namespace fs = std::filesystem;
using namespace rcm;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rcm_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const int rc = std::system((std::string(RCM_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("schema validation names the field") {
  CHECK(validate_config(json::object()).empty());
  const json bad = {{"env", {{"dim", 2}, {"p", 1.5}}}};
  const auto err = validate_config(bad);
  REQUIRE(err.size() == 1);
  CHECK(err[0].rfind("/env/p:", 0) == 0);
  CHECK(validate_config({{"experiment", "nope"}})[0].rfind("/experiment:", 0) == 0);
  CHECK(validate_config({{"wrkers", 2}})[0].rfind("/wrkers:", 0) == 0);
  CHECK(validate_config({{"workers", 0}})[0].rfind("/workers:", 0) == 0);
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("config round trip") {
  RunConfig c;
  c.experiment = "kernel";
  c.seed = 42;
  c.params = {{"torus_radius", 8}};
  const RunConfig back = parse_config(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.effective_params()["torus_radius"] == 8);
  CHECK(back.effective_params().contains("times"));
  for (const auto& p : preset_names())
    for (const auto& e : experiment_names()) CHECK_NOTHROW(preset_params(p, e));
}

TEST_CASE("env-audit at p = 1 passes and reruns byte-identically") {
  RunConfig c;
  c.env = {{"dim", 2}, {"p", 1.0}, {"seed", 3}};
  c.experiment = "env-audit";
  c.params = {{"samples", 5000}, {"hold_site_walks", 2000}};
  const auto a = scratch("audit_a"), b = scratch("audit_b");
  const auto ra = run_experiment(c, a);
  CHECK(ra.pass());
  c.workers = 2;
  run_experiment(c, b);
  for (const auto& f : ra.files)
    if (fs::path(f).extension() == ".csv") CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("plots regenerate from CSVs alone") {
  RunConfig c;
  c.experiment = "kernel";
  c.params = {{"torus_radius", 6}, {"times", {1, 2, 4}}, {"u_environments", 3}, {"u_box", 6}};
  const auto dir = scratch("plots");
  run_experiment(c, dir);
  const auto first = plot_results(dir);
  REQUIRE_FALSE(first.empty());
  std::vector<std::string> before;
  for (const auto& p : first) before.push_back(slurp(p));
  for (const auto& p : first) fs::remove(p);
  const auto second = plot_results(dir);
  REQUIRE(second.size() == first.size());
  for (std::size_t i = 0; i < second.size(); ++i) CHECK(slurp(second[i]) == before[i]);
  CHECK_THROWS_AS(plot_results(scratch("missing")), ConfigError);
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch("cli_run");
  CHECK(run_cli("list-presets") == 0);
  CHECK(run_cli("run --experiment env-audit --p 1.0 --set samples=2000 --set hold_site_walks=500 --out " +
                dir.string()) == 0);
  CHECK(fs::exists(dir / "manifest.json"));
  const auto manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.contains("wall_time_seconds"));
  CHECK(manifest["config"]["env"]["p"] == 1.0);
  CHECK(run_cli("run --experiment env-audit --p 1.5 --out " + dir.string()) == 2);
  CHECK(run_cli("run --experiment nope") == 2);
  const auto cfg = scratch("bad.json");
  io::write_text(cfg, "{\"env\": {\"dim\": 2, \"p\": 2}}");
  CHECK(run_cli("validate " + cfg.string()) == 2);
  io::write_text(cfg, "{\"env\": ");
  CHECK(run_cli("validate " + cfg.string()) == 2);
  io::write_text(cfg, "{\"experiment\": \"fpp\"}");
  CHECK(run_cli("validate " + cfg.string()) == 0);
  const auto empty = scratch("empty_dir");
  fs::create_directories(empty);
  CHECK(run_cli("plot " + empty.string()) == 2);
  CHECK(run_cli("plot " + dir.string()) == 0);
}

}  // TEST_SUITE
