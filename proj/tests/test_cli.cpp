#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "actsel/cli.hpp"
#include "actsel/errors.hpp"

using namespace actsel;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "actsel");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("actsel_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = config_from_json(R"({"T":[100,300],"replicates":3,"N":4,
    "instance":{"n":2,"q":5,"H":3,"spectral_radius":0.9},
    "tau1":{"mode":"fixed","value":2},"y_b":{"mode":"fixed","value":10},
    "verify":{"instances":3,"epsilons":[1e-7]}})");
  CHECK(cfg.T_grid == std::vector<long>{100, 300});
  CHECK(cfg.run_seeds() == std::vector<std::uint64_t>{0, 1, 2});
  CHECK(cfg.generator.q == 5);
  CHECK(cfg.generator.spectral_radius_target == 0.9);
  CHECK(cfg.tau1_mode == "fixed");
  CHECK(cfg.y_b == 10);
  CHECK(cfg.verify_instances == 3);
  CHECK(cfg.epsilons == std::vector<double>{1e-7});
  CHECK_THROWS_AS(config_from_json("{"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"T":"x"})"), ConfigError);
}

TEST_CASE("validation") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(validate_config(cfg));
  cfg.T_grid = {400, 200};
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg = {};
  cfg.seeds = {1, 1};
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg = {};
  cfg.yb_mode = "other";
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  CHECK(run({"gen", "--H", "5", "--q", "4", "--out", dir.string()}) == 2);
  CHECK(run({"bogus"}) == 2);
  CHECK(run({"run", "--T", "10", "--tau1", "20", "--seeds", "0", "--out", dir.string()}) == 3);
  CHECK(run({"verify", "--instances", "1", "--trials", "2", "--lse-seeds", "5", "--fault-scale",
             "0.001", "--out", dir.string()}) == 4);
  CHECK(run({"verify", "--instances", "1", "--trials", "2", "--lse-seeds", "5", "--out",
             dir.string()}) == 0);
  CHECK(fs::exists(dir / "bounds.csv"));
}

TEST_CASE("gen, run and sweep write their artifacts") {
  const auto dir = scratch("artifacts");
  const auto inst = (dir / "inst.json").string();
  REQUIRE(run({"gen", "--n", "2", "--q", "3", "--H", "2", "--seed", "5", "--file", inst}) == 0);
  REQUIRE(run({"run", "--instance", inst, "--T", "120", "--seeds", "4", "--traces", "--out",
               dir.string()}) == 0);
  CHECK(fs::exists(dir / "run_T120_s4.csv"));
  CHECK(fs::exists(dir / "run_T120_s4_trace.csv"));
  CHECK(slurp(dir / "summary.json").find("\"regret\"") != std::string::npos);

  REQUIRE(run({"sweep", "--T", "100", "200", "--reps", "2", "--out", dir.string()}) == 0);
  const auto sweep = slurp(dir / "sweep.csv");
  CHECK(sweep.rfind("T,mean_regret_per_round,std,reps\n", 0) == 0);
  CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 3);
  CHECK(fs::exists(dir / "sweep_runs.csv"));
}

TEST_CASE("sweep is reproducible across worker counts") {
  ExperimentConfig cfg;
  cfg.T_grid = {100, 150};
  cfg.replicates = 3;
  const auto a = run_sweep(cfg, 1), b = run_sweep(cfg, 3);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].per_run == b[i].per_run);
}
