#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "actsel/bounds.hpp"
#include "actsel/model.hpp"
#include "actsel/online.hpp"

namespace actsel {

/// Everything one invocation needs. Loaded from a JSON file, then overridden
/// by command-line flags.
struct ExperimentConfig {
  // instance
  std::string instance_file;        // empty -> generate
  GeneratorParams generator;
  bool instance_per_replicate = true;  // generator seed offset by the run seed

  // costs
  std::string cost_kind = "identity";  // identity | sinusoidal
  double q_scale = 1.0;
  double qf_scale = 2.0;
  double r_scale = 1.0;
  double amplitude = 1.0;
  int period = 100;

  // runs
  std::vector<long> T_grid{200, 400, 800, 1600};
  std::vector<std::uint64_t> seeds;  // empty -> 0..replicates-1
  int replicates = 10;
  int N = 5;
  std::string tau1_mode = "log";  // log | theorem | fixed
  double tau1_c = 1.0;
  int tau1_fixed = 1;
  double delta = 0.1;
  double lambda = 1.0;
  std::string yb_mode = "adaptive";  // adaptive | fixed | theorem
  double y_b = 1.0;
  bool oracle_estimator = false;
  std::string output_dir = ".";
  bool dump_traces = false;

  // verify
  int verify_instances = 10;
  GeneratorParams verify_generator{2, 4, {}, 2, 0.5, 1.0, 1000, 200};
  std::vector<double> epsilons{1e-8, 1e-7, 1e-6, 1e-5};
  std::vector<double> slope_epsilons{1e-6, 1e-5, 1e-4};
  int trials = 20;
  double fault_scale = 1.0;  // < 1 shrinks every deterministic rhs
  int lse_seeds = 100;
  int lse_epochs = 8;
  int lse_tau1 = 5;

  std::vector<std::uint64_t> run_seeds() const;
};

/// Throws ConfigError on malformed JSON or unknown enum values.
ExperimentConfig config_from_json(const std::string& text, ExperimentConfig base = {});

/// T grid strictly increasing, seeds distinct, replicates >= 1, known modes.
void validate_config(const ExperimentConfig& cfg);

SystemInstance instance_for(const ExperimentConfig& cfg, std::uint64_t run_seed);
CostSchedule costs_for(const ExperimentConfig& cfg, const SystemInstance& inst, long T);
RunConfig run_config_for(const ExperimentConfig& cfg, long T, std::uint64_t run_seed,
                         const SystemInstance& inst, const CostSchedule& costs);

struct SweepPoint {
  long T = 0;
  double mean_regret_per_round = 0.0;
  double std = 0.0;  // sample standard deviation over replicates
  int reps = 0;
  std::vector<double> per_run;  // R_A / T in seed order
};

/// Every (T, seed) pair as an independent task on `workers` threads.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg, int workers);

/// ACTSEL_WORKERS if set and positive, else the hardware concurrency.
int worker_count();

/// Exit codes: 0 success, 1 numerical failure, 2 configuration error,
/// 3 infeasible schedule, 4 verification failure.
int cli_main(int argc, char** argv);

}  // namespace actsel
