// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "actsel/bandit.hpp"
#include "actsel/bounds.hpp"
#include "actsel/cli.hpp"
#include "actsel/errors.hpp"
#include "actsel/linalg.hpp"
#include "actsel/lqr.hpp"
#include "actsel/online.hpp"
#include "actsel/sim.hpp"
#include "actsel/sysid.hpp"
#include "oracles.hpp"

using namespace actsel;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

GeneratorParams small_generator(std::uint64_t seed) {
  GeneratorParams g;
  g.n = 3;
  g.q = 4;
  g.H = 2;
  g.seed = seed;
  return g;
}

// 1. Regret per round decreases over the T grid.
Outcome regret_sweep() {
  ExperimentConfig cfg;  // Q = I, Qf = 2I, R = I, N = 5, tau1 = ceil(log T), 10 replicates
  const auto pts = run_sweep(cfg, worker_count());
  bool decreasing = true;
  std::string curve;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i && !(pts[i].mean_regret_per_round < pts[i - 1].mean_regret_per_round)) decreasing = false;
    curve += fmt(" T=%.0f:%.3f", static_cast<double>(pts[i].T), pts[i].mean_regret_per_round);
  }
  const double ratio = pts.back().mean_regret_per_round / pts.front().mean_regret_per_round;
  return {decreasing && ratio < 0.5, curve + fmt(" ratio=%.3f", ratio)};
}

// 2. Riccati scalar case, policy evaluation identity, Monte-Carlo agreement.
Outcome riccati_oracles() {
  const Mat one = Mat::Constant(1, 1, 1.0);
  const auto s = riccati_backward(one, one, one, one, one, 1);
  double scalar_err = std::max({std::abs(s.gains[0](0, 0) + 0.5), std::abs(s.values[0](0, 0) - 1.5),
                                std::abs(optimal_expected_cost(s, 1.7) - 1.7 * 1.7)});

  double eval_err = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto g = small_generator(seed);
    g.n = 1 + static_cast<int>(seed % 3);
    const auto inst = generate_random_instance(g);
    const auto c = CostSchedule::identity_family(inst.n, inst.m(), 1).at(0);
    for (const auto& sub : inst.candidate_subsets()) {
      const Mat BS = restrict_input(inst.B, sub), RS = restrict_cost(c.R, sub);
      const auto opt = riccati_backward(inst.A, BS, c.Q, c.Qf, RS, 5);
      const double J = optimal_expected_cost(opt, inst.sigma);
      const double Je = evaluate_policy(inst.A, BS, opt.gains, c.Q, c.Qf, RS, inst.sigma).expected_cost;
      eval_err = std::max(eval_err, std::abs(Je - J) / std::max(1.0, std::abs(J)));
    }
  }

  double worst_z = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto inst = generate_random_instance(small_generator(100 + seed));
    const auto c = CostSchedule::identity_family(inst.n, inst.m(), 1).at(0);
    const auto sub = inst.candidate_subsets()[seed];
    const auto opt = riccati_backward(inst.A, restrict_input(inst.B, sub), c.Q, c.Qf,
                                      restrict_cost(c.R, sub), 5);
    const double J = optimal_expected_cost(opt, inst.sigma);
    const int episodes = 100000;
    double sum = 0.0, sumsq = 0.0;
    Rng rng = make_stream(seed, 0, Stream::kDynamics);
    for (int e = 0; e < episodes; ++e) {
      const double v = rollout_gain_policy(inst, sub, opt.gains, c, 0, rng).realized_cost;
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / episodes;
    const double se = std::sqrt((sumsq / episodes - mean * mean) / (episodes - 1));
    worst_z = std::max(worst_z, std::abs(mean - J) / se);
  }
  return {scalar_err <= 1e-12 && eval_err <= 1e-10 && worst_z <= 3.0,
          fmt("scalar_err=%.2e eval_err=%.2e worst_mc_z=%.2f", scalar_err, eval_err, worst_z)};
}

// 3. Cost-gap identity: both routes agree on 100 random draws.
Outcome cost_gap_identity() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  double worst = 0.0;
  int draws = 0, compared = 0;
  for (std::uint64_t seed = 0; draws < 100; ++seed) {
    const auto inst = generate_random_instance(small_generator(200 + seed));
    const auto c = CostSchedule::identity_family(inst.n, inst.m(), 1).at(0);
    for (const auto& sub : inst.candidate_subsets()) {
      if (draws == 100) break;
      const Mat BS = restrict_input(inst.B, sub), RS = restrict_cost(c.R, sub);
      Mat EA(inst.n, inst.n), EB(BS.rows(), BS.cols());
      for (int i = 0; i < EA.size(); ++i) EA.data()[i] = g(rng);
      for (int i = 0; i < EB.size(); ++i) EB.data()[i] = g(rng);
      const double eps = std::pow(10.0, -1.0 - 0.5 * (draws % 3));
      const auto opt = riccati_backward(inst.A, BS, c.Q, c.Qf, RS, 5);
      const auto ce = riccati_backward(inst.A + eps * EA / EA.norm(), BS + eps * EB / EB.norm(), c.Q,
                                       c.Qf, RS, 5);
      try {
        const auto gap = cost_gap_both(inst.A, BS, opt, ce, c.Q, RS, inst.sigma);
        const double rel = std::abs(gap.by_evaluation - gap.by_gain_error) /
                           std::max(std::abs(gap.by_evaluation), 1e-300);
        // Both routes below double resolution of J are indistinguishable from zero.
        const double J = optimal_expected_cost(opt, inst.sigma);
        if (std::abs(gap.by_evaluation) > 1e-6 * J) {
          worst = std::max(worst, rel);
          ++compared;
        }
      } catch (const NumericalError&) {
        worst = INFINITY;
      }
      ++draws;
    }
  }
  return {worst <= 1e-8 && compared == draws,
          fmt("draws=%.0f compared=%.0f worst_relative_disagreement=%.2e", draws, compared, worst)};
}

// 4. Perturbation bounds: zero violations and quadratic cost-gap slope.
Outcome perturbation_bounds() {
  const ExperimentConfig defaults;
  CampaignConfig cc;
  cc.instances = 10;
  cc.generator = defaults.verify_generator;
  cc.N = 5;
  cc.verify.epsilons = defaults.epsilons;
  cc.verify.trials = 20;
  cc.slope_epsilons = defaults.slope_epsilons;
  cc.workers = worker_count();
  const auto res = run_bound_campaign(cc);
  double smin = INFINITY, smax = -INFINITY;
  for (double s : res.slopes) {
    smin = std::min(smin, s);
    smax = std::max(smax, s);
  }
  const long v = res.report.violations();
  const long checked = res.report.checked();
  const bool pass = v == 0 && checked > 0 && res.instances_skipped == 0 && !res.slopes.empty() &&
                    smin >= 1.8 && smax <= 2.2;
  return {pass, fmt("checked_rows=%.0f violations=%.0f slope=[%.4f,%.4f]", static_cast<double>(checked),
                    static_cast<double>(v), smin, smax)};
}

// 5. LSE error decreases across epochs; self-normalized bound frequency.
Outcome lse_convergence() {
  const auto inst = generate_random_instance(small_generator(300));
  const int workers = worker_count();
  const auto shrink = run_lse_campaign(inst, 5, 5, 8, 20, 0.1, 1.0, 1, workers);
  std::vector<double> med;
  for (int i : {1, 2, 4, 8}) {
    std::vector<double> col;
    for (const auto& row : shrink.errors) col.push_back(row[i - 1]);
    med.push_back(median(col));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < med.size(); ++i) monotone = monotone && med[i] <= med[i - 1];

  const double delta = 0.1;
  const int seeds = 100;
  const auto freq = run_lse_campaign(inst, 5, 5, 8, seeds, delta, 1.0, 2, workers).lemma7_frequency;
  const double need = 1.0 - delta - 3.0 * std::sqrt(delta / seeds);
  return {monotone && freq >= need,
          fmt("median_err(1,2,4,8)=%.4f,%.4f,%.4f,%.4f", med[0], med[1], med[2], med[3]) +
              fmt(" lemma7_freq=%.3f need=%.3f", freq, need)};
}

// 6. Exp3.S on two arms with costs 0 and y_b.
Outcome exp3s_two_arm() {
  const long T = 2000;
  const double y_b = 1.0;
  std::vector<double> fractions;
  int within = 0;
  const double bound = exp3s_regret_bound(2, T, y_b, 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    BanditOptions opts;
    opts.yb_mode = YbMode::kFixed;
    opts.y_b = y_b;
    auto st = exp3s_init_arms(2, T, opts);
    Rng rng = make_stream(seed, 0, Stream::kBandit);
    double regret = 0.0;
    int best_late = 0;
    for (long t = 0; t < T; ++t) {
      const int a = exp3s_sample(st, rng);
      const double cost = a == 0 ? 0.0 : y_b;
      regret += cost;
      if (t >= T - 500 && a == 0) ++best_late;
      exp3s_update(st, a, cost);
    }
    fractions.push_back(best_late / 500.0);
    within += regret <= bound;
  }
  const double med = median(fractions);
  return {med > 0.8 && within >= 19,
          fmt("median_best_fraction=%.3f within_bound=%.0f/20 bound=%.1f", med, within, bound)};
}

// 7. Regret decomposition and zero-mean control regret with exact estimates.
Outcome decomposition() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = generate_random_instance(small_generator(400 + seed));
    const auto costs = CostSchedule::identity_family(inst.n, inst.m(), 400);
    RunConfig rc;
    rc.T = 400;
    rc.seed = seed;
    const auto rep = run_algorithm1(inst, costs, rc);
    const auto d = regret_decomposition(rep, inst, costs, rc.N);
    worst = std::max(worst, std::abs(d.total() - rep.regret) / std::max(1.0, std::abs(rep.regret)));
  }

  auto g = small_generator(500);
  g.q = 2;
  g.H = 2;  // a single candidate subset
  const auto inst = generate_random_instance(g);
  const auto costs = CostSchedule::identity_family(inst.n, inst.m(), 400);
  std::vector<double> r;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RunConfig rc;
    rc.T = 400;
    rc.seed = seed;
    rc.oracle_estimator = true;
    r.push_back(run_algorithm1(inst, costs, rc).control_regret());
  }
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= r.size();
  double ss = 0.0;
  for (double v : r) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (r.size() - 1) / r.size());
  return {worst <= 1e-6 && std::abs(mean) <= 3.0 * se,
          fmt("worst_sum_error=%.2e oracle_control_regret_mean=%.3f se=%.3f", worst, mean, se)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"1 regret per round decreases with T", regret_sweep},
      {"2 Riccati oracles and Monte-Carlo agreement", riccati_oracles},
      {"3 cost-gap identity", cost_gap_identity},
      {"4 perturbation bounds and quadratic slope", perturbation_bounds},
      {"5 LSE convergence and self-normalized bound", lse_convergence},
      {"6 Exp3.S two-arm", exp3s_two_arm},
      {"7 regret decomposition", decomposition},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
