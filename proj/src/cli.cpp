#include "actsel/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "actsel/errors.hpp"
#include "parallel.hpp"

namespace actsel {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::uint64_t> ExperimentConfig::run_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out(std::max(0, replicates));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

namespace {

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

void read_generator(const json& j, GeneratorParams& g) {
  read(j, "n", g.n);
  read(j, "q", g.q);
  read(j, "H", g.H);
  read(j, "block_widths", g.block_widths);
  read(j, "spectral_radius", g.spectral_radius_target);
  read(j, "sigma", g.sigma);
  read(j, "seed", g.seed);
  read(j, "max_retries", g.max_retries);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + p.string());
  return out;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text, ExperimentConfig cfg) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    if (j.contains("instance")) {
      const auto& ji = j.at("instance");
      read(ji, "file", cfg.instance_file);
      read(ji, "per_replicate", cfg.instance_per_replicate);
      read_generator(ji, cfg.generator);
    }
    if (j.contains("costs")) {
      const auto& jc = j.at("costs");
      read(jc, "kind", cfg.cost_kind);
      read(jc, "q_scale", cfg.q_scale);
      read(jc, "qf_scale", cfg.qf_scale);
      read(jc, "r_scale", cfg.r_scale);
      read(jc, "amplitude", cfg.amplitude);
      read(jc, "period", cfg.period);
    }
    read(j, "T", cfg.T_grid);
    read(j, "seeds", cfg.seeds);
    read(j, "replicates", cfg.replicates);
    read(j, "N", cfg.N);
    if (j.contains("tau1")) {
      const auto& jt = j.at("tau1");
      read(jt, "mode", cfg.tau1_mode);
      read(jt, "c", cfg.tau1_c);
      read(jt, "value", cfg.tau1_fixed);
      read(jt, "delta", cfg.delta);
    }
    read(j, "lambda", cfg.lambda);
    if (j.contains("y_b")) {
      read(j.at("y_b"), "mode", cfg.yb_mode);
      read(j.at("y_b"), "value", cfg.y_b);
    }
    read(j, "oracle_estimator", cfg.oracle_estimator);
    read(j, "output_dir", cfg.output_dir);
    read(j, "dump_traces", cfg.dump_traces);
    if (j.contains("verify")) {
      const auto& jv = j.at("verify");
      read(jv, "instances", cfg.verify_instances);
      if (jv.contains("generator")) read_generator(jv.at("generator"), cfg.verify_generator);
      read(jv, "epsilons", cfg.epsilons);
      read(jv, "slope_epsilons", cfg.slope_epsilons);
      read(jv, "trials", cfg.trials);
      read(jv, "fault_scale", cfg.fault_scale);
      read(jv, "lse_seeds", cfg.lse_seeds);
      read(jv, "lse_epochs", cfg.lse_epochs);
      read(jv, "lse_tau1", cfg.lse_tau1);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.T_grid.empty()) throw ConfigError("T grid is empty");
  for (std::size_t i = 0; i < cfg.T_grid.size(); ++i) {
    if (cfg.T_grid[i] < 1) throw ConfigError("T values must be >= 1");
    if (i && cfg.T_grid[i] <= cfg.T_grid[i - 1]) throw ConfigError("T grid must be strictly increasing");
  }
  if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
  const auto seeds = cfg.run_seeds();
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("seeds must be distinct");
  if (cfg.N < 1) throw ConfigError("N must be >= 1");
  if (cfg.tau1_mode != "log" && cfg.tau1_mode != "theorem" && cfg.tau1_mode != "fixed")
    throw ConfigError("tau1 mode must be log, theorem or fixed");
  if (cfg.yb_mode != "adaptive" && cfg.yb_mode != "fixed" && cfg.yb_mode != "theorem")
    throw ConfigError("y_b mode must be adaptive, fixed or theorem");
  if (cfg.cost_kind != "identity" && cfg.cost_kind != "sinusoidal")
    throw ConfigError("cost kind must be identity or sinusoidal");
  if (!(cfg.lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("delta must be in (0,1)");
  if (cfg.generator.H > cfg.generator.q || cfg.generator.H < 1)
    throw ConfigError("H must satisfy 1 <= H <= q");
}

SystemInstance instance_for(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  if (!cfg.instance_file.empty()) return load_instance(cfg.instance_file);
  GeneratorParams g = cfg.generator;
  if (cfg.instance_per_replicate) g.seed += run_seed;
  return generate_random_instance(g);
}

CostSchedule costs_for(const ExperimentConfig& cfg, const SystemInstance& inst, long T) {
  if (cfg.cost_kind == "sinusoidal")
    return CostSchedule::sinusoidal(inst.n, inst.block_widths, static_cast<int>(T), cfg.amplitude,
                                    cfg.period);
  return CostSchedule::identity_family(inst.n, inst.m(), static_cast<int>(T), cfg.q_scale,
                                       cfg.qf_scale, cfg.r_scale);
}

RunConfig run_config_for(const ExperimentConfig& cfg, long T, std::uint64_t run_seed,
                         const SystemInstance& inst, const CostSchedule& costs) {
  RunConfig rc;
  rc.T = T;
  rc.N = cfg.N;
  rc.lambda = cfg.lambda;
  rc.seed = run_seed;
  rc.oracle_estimator = cfg.oracle_estimator;
  rc.tau1_c = cfg.tau1_c;
  std::optional<ConstantsProfile> constants;
  auto profile = [&]() -> const ConstantsProfile& {
    if (!constants) constants = estimate_constants(inst, costs, cfg.N);
    return *constants;
  };
  if (cfg.tau1_mode == "fixed") {
    rc.tau1 = cfg.tau1_fixed;
  } else if (cfg.tau1_mode == "theorem") {
    const auto& c = profile();
    Tau1Constants tc;
    tc.n = inst.n;
    tc.m = inst.m();
    tc.p = inst.groups();
    tc.N = cfg.N;
    tc.T = T;
    tc.lambda = cfg.lambda;
    tc.sigma = inst.sigma;
    tc.vartheta = c.vartheta;
    tc.epsilon0 = c.epsilon0;
    tc.delta = cfg.delta;
    tc.zeta0 = inst.zeta0;
    tc.eta0 = inst.eta0;
    tc.kappa = inst.kappa;
    double raw = 0.0;
    try {
      rc.tau1 = compute_tau1(tc, &raw);
    } catch (const ConfigError&) {
      throw InfeasibleSchedule("theorem-mode tau1 = " + fmt(raw) + " exceeds T = " + std::to_string(T) +
                               " (schedule needs T > tau1 p)");
    }
  }
  rc.bandit.y_b = cfg.y_b;
  if (cfg.yb_mode == "adaptive") {
    rc.bandit.yb_mode = YbMode::kAdaptive;
  } else {
    rc.bandit.yb_mode = YbMode::kFixed;
    if (cfg.yb_mode == "theorem") rc.bandit.y_b = cost_ceiling(profile(), T, cfg.delta);
  }
  return rc;
}

int worker_count() {
  if (const char* env = std::getenv("ACTSEL_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg, int workers) {
  validate_config(cfg);
  const auto seeds = cfg.run_seeds();
  const int S = static_cast<int>(seeds.size());
  const int tasks = static_cast<int>(cfg.T_grid.size()) * S;
  std::vector<double> values(tasks);
  detail::parallel_for(tasks, workers, [&](int i) {
    const long T = cfg.T_grid[i / S];
    const auto seed = seeds[i % S];
    const SystemInstance inst = instance_for(cfg, seed);
    const CostSchedule costs = costs_for(cfg, inst, T);
    const auto rep = run_algorithm1(inst, costs, run_config_for(cfg, T, seed, inst, costs));
    values[i] = rep.regret / static_cast<double>(T);
  });
  std::vector<SweepPoint> out;
  for (std::size_t g = 0; g < cfg.T_grid.size(); ++g) {
    SweepPoint p;
    p.T = cfg.T_grid[g];
    p.reps = S;
    p.per_run.assign(values.begin() + g * S, values.begin() + (g + 1) * S);
    double sum = 0.0;
    for (double v : p.per_run) sum += v;
    p.mean_regret_per_round = sum / S;
    double ss = 0.0;
    for (double v : p.per_run) ss += (v - p.mean_regret_per_round) * (v - p.mean_regret_per_round);
    p.std = S > 1 ? std::sqrt(ss / (S - 1)) : 0.0;
    out.push_back(std::move(p));
  }
  return out;
}

// --- commands -------------------------------------------------------------

namespace {

int cmd_gen(const ExperimentConfig& cfg, const std::string& file) {
  if (cfg.generator.H > cfg.generator.q || cfg.generator.H < 1)
    throw ConfigError("H must satisfy 1 <= H <= q (got H=" + std::to_string(cfg.generator.H) +
                      ", q=" + std::to_string(cfg.generator.q) + ")");
  const SystemInstance inst = generate_random_instance(cfg.generator);
  fs::path out = file.empty() ? fs::path(cfg.output_dir) / "instance.json" : fs::path(file);
  if (out.has_parent_path()) ensure_dir(out.parent_path().string());
  save_instance(inst, out);
  std::cout << "wrote " << out.string() << " (n=" << inst.n << ", q=" << inst.q << ", H=" << inst.H
            << ", ell=" << inst.ell << ", nu=" << fmt(inst.nu) << ")\n";
  return 0;
}

int cmd_run(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ensure_dir(cfg.output_dir);
  json summary = json::array();
  for (long T : cfg.T_grid) {
    for (auto seed : cfg.run_seeds()) {
      const SystemInstance inst = instance_for(cfg, seed);
      const CostSchedule costs = costs_for(cfg, inst, T);
      const RunConfig rc = run_config_for(cfg, T, seed, inst, costs);
      const auto rep = run_algorithm1(inst, costs, rc);
      const auto dec = regret_decomposition(rep, inst, costs, cfg.N);
      const std::string stem = "run_T" + std::to_string(T) + "_s" + std::to_string(seed);
      {
        auto os = open_out(fs::path(cfg.output_dir) / (stem + ".csv"));
        write_report_csv(os, rep);
      }
      if (cfg.dump_traces) {
        // Replays the last control round's stream to dump one representative trace.
        const auto& last = rep.rounds.back();
        Rng rng = make_stream(seed, static_cast<std::uint64_t>(last.t), Stream::kDynamics);
        const auto ce = synthesize_ce_gains(inst, rep.estimates.back(), last.subset,
                                            costs.at(static_cast<int>(last.t)), cfg.N);
        const auto tr = rollout_gain_policy(inst, last.subset, ce.gains,
                                            costs.at(static_cast<int>(last.t)),
                                            static_cast<int>(last.t), rng);
        auto os = open_out(fs::path(cfg.output_dir) / (stem + "_trace.csv"));
        write_trace_csv(os, tr);
      }
      json s = {{"T", T},
                {"seed", seed},
                {"tau1", rep.schedule.tau1},
                {"n_e", rep.schedule.n_e},
                {"tau2", rep.schedule.tau2},
                {"regret", rep.regret},
                {"regret_per_round", rep.regret / static_cast<double>(T)},
                {"j_star", rep.j_star},
                {"oracle_hardness", rep.oracle_hardness},
                {"fallbacks", rep.fallbacks},
                {"R1", dec.R1},
                {"R2", dec.R2},
                {"R3", dec.R3},
                {"R4", dec.R4},
                {"R2_R3_split", "convention: R2 = expected CE cost of played subset minus that of the best subset"}};
      std::cout << "T=" << T << " seed=" << seed << " regret=" << fmt(rep.regret)
                << " regret_per_round=" << fmt(rep.regret / static_cast<double>(T))
                << " h=" << rep.oracle_hardness << "\n";
      summary.push_back(std::move(s));
    }
  }
  auto os = open_out(fs::path(cfg.output_dir) / "summary.json");
  os << summary.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ensure_dir(cfg.output_dir);
  const auto points = run_sweep(cfg, worker_count());
  const auto seeds = cfg.run_seeds();
  auto os = open_out(fs::path(cfg.output_dir) / "sweep.csv");
  os << "T,mean_regret_per_round,std,reps\n";
  auto runs = open_out(fs::path(cfg.output_dir) / "sweep_runs.csv");
  runs << "T,seed,regret,regret_per_round\n";
  for (const auto& p : points) {
    os << p.T << "," << fmt(p.mean_regret_per_round) << "," << fmt(p.std) << "," << p.reps << "\n";
    std::cout << "T=" << p.T << " mean_regret_per_round=" << fmt(p.mean_regret_per_round)
              << " std=" << fmt(p.std) << " reps=" << p.reps << "\n";
    for (std::size_t i = 0; i < p.per_run.size(); ++i)
      runs << p.T << "," << seeds[i] << "," << fmt(p.per_run[i] * static_cast<double>(p.T)) << ","
           << fmt(p.per_run[i]) << "\n";
  }
  return 0;
}

int cmd_verify(const ExperimentConfig& cfg) {
  ensure_dir(cfg.output_dir);
  CampaignConfig cc;
  cc.instances = cfg.verify_instances;
  cc.generator = cfg.verify_generator;
  cc.N = cfg.N;
  cc.verify.epsilons = cfg.epsilons;
  cc.verify.trials = cfg.trials;
  cc.verify.rhs_scale = cfg.fault_scale;
  cc.verify.seed = cfg.verify_generator.seed;
  cc.slope_epsilons = cfg.slope_epsilons;
  cc.workers = worker_count();
  const auto res = run_bound_campaign(cc);

  GeneratorParams g = cfg.verify_generator;
  const SystemInstance inst = generate_random_instance(g);
  const auto lse = run_lse_campaign(inst, cfg.N, cfg.lse_tau1, cfg.lse_epochs, cfg.lse_seeds,
                                    cfg.delta, cfg.lambda, g.seed, cc.workers);
  BoundReport all = res.report;
  all.append(lse.report);
  {
    auto os = open_out(fs::path(cfg.output_dir) / "bounds.csv");
    write_bounds_csv(os, all);
  }
  const long violations = res.report.violations();
  const double slack = probabilistic_slack(cfg.delta, cfg.lse_seeds);
  const bool lse_ok = 1.0 - lse.lemma7_frequency <= slack;
  double smin = INFINITY, smax = -INFINITY;
  for (double s : res.slopes) {
    smin = std::min(smin, s);
    smax = std::max(smax, s);
  }
  std::cout << "rows=" << res.report.rows.size() << " checked=" << res.report.checked()
            << " violations=" << violations << " skipped_instances=" << res.instances_skipped << "\n";
  std::cout << "cost-gap slope range [" << fmt(smin) << ", " << fmt(smax) << "]\n";
  std::cout << "lemma7 frequency=" << fmt(lse.lemma7_frequency) << " (need >= " << fmt(1.0 - slack)
            << ")\n";
  if (res.report.checked() == 0)
    std::cerr << "warning: every deterministic row is vacuous (epsilon grid above all hypotheses)\n";
  if (violations > 0) {
    int shown = 0;
    for (const auto& r : res.report.rows)
      if (r.hypothesis_ok && !r.bound_ok && shown++ < 20)
        std::cerr << "violation: " << r.lemma << " " << r.subset << " eps=" << fmt(r.epsilon)
                  << " k=" << r.k << " lhs=" << fmt(r.lhs) << " rhs=" << fmt(r.rhs) << "\n";
  }
  return violations == 0 && lse_ok ? 0 : 4;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Online actuator selection with certainty-equivalence LQR"};
  app.require_subcommand(1);

  std::string config_path;
  ExperimentConfig flags;  // holders for overrides
  std::string gen_file;
  std::vector<std::string> set_opts;

  auto* gen = app.add_subcommand("gen", "generate a random instance file");
  auto* run = app.add_subcommand("run", "run the online algorithm once per (T, seed)");
  auto* sweep = app.add_subcommand("sweep", "mean regret per round over a T grid");
  auto* verify = app.add_subcommand("verify", "perturbation-bound verification campaign");

  std::vector<CLI::Option*> opts;
  auto common = [&](CLI::App* c) {
    c->add_option("--config", config_path, "JSON config file");
    opts.push_back(c->add_option("--out", flags.output_dir, "output directory"));
    opts.push_back(c->add_option("--n", flags.generator.n, "state dimension"));
    opts.push_back(c->add_option("--q", flags.generator.q, "candidate actuators"));
    opts.push_back(c->add_option("--H", flags.generator.H, "actuators per subset"));
    opts.push_back(c->add_option("--rho", flags.generator.spectral_radius_target, "spectral radius of A"));
    opts.push_back(c->add_option("--sigma", flags.generator.sigma, "noise standard deviation"));
    opts.push_back(c->add_option("--seed", flags.generator.seed, "generator seed"));
    opts.push_back(c->add_option("--N", flags.N, "horizon per round"));
  };
  auto runlike = [&](CLI::App* c) {
    opts.push_back(c->add_option("--instance", flags.instance_file, "instance file"));
    opts.push_back(c->add_option("--T", flags.T_grid, "rounds (one or more)"));
    opts.push_back(c->add_option("--seeds", flags.seeds, "run seeds"));
    opts.push_back(c->add_option("--reps", flags.replicates, "replicates when --seeds is absent"));
    opts.push_back(c->add_option("--tau1-mode", flags.tau1_mode, "log | theorem | fixed"));
    opts.push_back(c->add_option("--tau1-c", flags.tau1_c, "c in c*ceil(ln T)"));
    opts.push_back(c->add_option("--tau1", flags.tau1_fixed, "fixed tau1"));
    opts.push_back(c->add_option("--lambda", flags.lambda, "ridge weight"));
    opts.push_back(c->add_option("--yb-mode", flags.yb_mode, "adaptive | fixed | theorem"));
    opts.push_back(c->add_option("--yb", flags.y_b, "cost normalizer"));
    opts.push_back(c->add_option("--cost-kind", flags.cost_kind, "identity | sinusoidal"));
    opts.push_back(c->add_flag("--oracle-estimator", flags.oracle_estimator, "use the true (A, B)"));
    opts.push_back(c->add_flag("--traces", flags.dump_traces, "dump one trace CSV per run"));
  };
  common(gen);
  gen->add_option("--file", gen_file, "instance output path");
  common(run);
  runlike(run);
  common(sweep);
  runlike(sweep);
  common(verify);
  opts.push_back(verify->add_option("--instances", flags.verify_instances, "campaign instances"));
  opts.push_back(verify->add_option("--trials", flags.trials, "draws per epsilon"));
  opts.push_back(verify->add_option("--eps", flags.epsilons, "epsilon grid"));
  opts.push_back(verify->add_option("--fault-scale", flags.fault_scale, "rhs multiplier (fault injection)"));
  opts.push_back(verify->add_option("--lse-seeds", flags.lse_seeds, "seeds for the LSE check"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path, std::ios::binary);
      if (!in) throw ConfigError("cannot read config " + config_path);
      std::stringstream buf;
      buf << in.rdbuf();
      cfg = config_from_json(buf.str());
    }
    // Command-line values win over file values.
    auto set = [&](const std::string& name) {
      for (auto* o : opts)
        if (o->check_name(name) && o->count() > 0) return true;
      return false;
    };
    if (set("--out")) cfg.output_dir = flags.output_dir;
    if (set("--n")) cfg.generator.n = flags.generator.n;
    if (set("--q")) cfg.generator.q = flags.generator.q;
    if (set("--H")) cfg.generator.H = flags.generator.H;
    if (set("--rho")) cfg.generator.spectral_radius_target = flags.generator.spectral_radius_target;
    if (set("--sigma")) cfg.generator.sigma = flags.generator.sigma;
    if (set("--seed")) cfg.generator.seed = flags.generator.seed;
    if (set("--N")) cfg.N = flags.N;
    if (set("--instance")) cfg.instance_file = flags.instance_file;
    if (set("--T")) cfg.T_grid = flags.T_grid;
    if (set("--seeds")) cfg.seeds = flags.seeds;
    if (set("--reps")) cfg.replicates = flags.replicates;
    if (set("--tau1-mode")) cfg.tau1_mode = flags.tau1_mode;
    if (set("--tau1-c")) cfg.tau1_c = flags.tau1_c;
    if (set("--tau1")) {
      cfg.tau1_fixed = flags.tau1_fixed;
      if (!set("--tau1-mode")) cfg.tau1_mode = "fixed";
    }
    if (set("--lambda")) cfg.lambda = flags.lambda;
    if (set("--yb-mode")) cfg.yb_mode = flags.yb_mode;
    if (set("--yb")) cfg.y_b = flags.y_b;
    if (set("--cost-kind")) cfg.cost_kind = flags.cost_kind;
    if (set("--oracle-estimator")) cfg.oracle_estimator = flags.oracle_estimator;
    if (set("--traces")) cfg.dump_traces = flags.dump_traces;
    if (set("--instances")) cfg.verify_instances = flags.verify_instances;
    if (set("--trials")) cfg.trials = flags.trials;
    if (set("--eps")) cfg.epsilons = flags.epsilons;
    if (set("--fault-scale")) cfg.fault_scale = flags.fault_scale;
    if (set("--lse-seeds")) cfg.lse_seeds = flags.lse_seeds;
    if (verify->parsed()) {
      // The verify campaign draws its own instances; generator flags steer them.
      if (set("--n")) cfg.verify_generator.n = cfg.generator.n;
      if (set("--q")) cfg.verify_generator.q = cfg.generator.q;
      if (set("--H")) cfg.verify_generator.H = cfg.generator.H;
      if (set("--rho")) cfg.verify_generator.spectral_radius_target = cfg.generator.spectral_radius_target;
      if (set("--seed")) cfg.verify_generator.seed = cfg.generator.seed;
    }

    if (gen->parsed()) return cmd_gen(cfg, gen_file);
    if (run->parsed()) return cmd_run(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
    return cmd_verify(cfg);
  } catch (const InfeasibleSchedule& e) {
    std::cerr << "error: infeasible schedule: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace actsel
