#include "actsel/online.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "actsel/errors.hpp"
#include "actsel/sim.hpp"

namespace actsel {

EpochSchedule build_schedule(long T, int tau1, int p) {
  if (tau1 < 1) throw ConfigError("tau1 must be >= 1");
  if (p < 1) throw ConfigError("partition must have at least one group");
  const long block = static_cast<long>(tau1) * p;
  if (T <= block)
    throw InfeasibleSchedule("T = " + std::to_string(T) + " must exceed tau1 * p = " +
                             std::to_string(block) + " (required for any T > tau1 p)");
  EpochSchedule s;
  s.T = T;
  s.tau1 = tau1;
  s.p = p;
  s.n_e = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(T)) / static_cast<double>(block)));
  if (s.estimation_rounds() > T)
    throw InfeasibleSchedule("estimation rounds n_e tau1 p = " +
                             std::to_string(s.estimation_rounds()) + " exceed T = " +
                             std::to_string(T));
  s.tau2 = (T - s.estimation_rounds()) / s.n_e;
  long t = 0;
  for (int i = 0; i < s.n_e; ++i) {
    Epoch e;
    e.est_begin = t;
    e.ctrl_begin = t + block;
    e.end = i + 1 == s.n_e ? T : e.ctrl_begin + s.tau2;
    s.epochs.push_back(e);
    t = e.end;
  }
  return s;
}

double state_bound_zb(const Tau1Constants& c) {
  const double k2 = c.kappa * c.kappa;
  return 20.0 * c.zeta0 * c.zeta0 * (1.0 + c.kappa) * (1.0 + c.kappa) * c.sigma * c.sigma /
         ((1.0 - c.eta0) * (1.0 - c.eta0)) *
         (2.0 * (c.vartheta * c.vartheta + 1.0) * k2 * c.m + c.n) *
         std::log(8.0 * c.N * static_cast<double>(c.T) / c.delta);
}

int compute_tau1(const Tau1Constants& c, double* raw) {
  if (!(c.epsilon0 > 0.0)) throw ConfigError("compute_tau1: epsilon0 must be > 0");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("compute_tau1: delta must be in (0,1)");
  if (c.N < 2) throw ConfigError("compute_tau1: N must be >= 2");
  if (!(c.eta0 > 0.0 && c.eta0 < 1.0)) throw ConfigError("compute_tau1: eta0 must be in (0,1)");
  if (!(c.lambda > 0.0 && c.sigma > 0.0)) throw ConfigError("compute_tau1: lambda, sigma must be > 0");
  const double zb = state_bound_zb(c);
  const double inner = c.p + c.N * static_cast<double>(c.T) * zb / c.lambda;
  const double num = 160.0 * c.n *
                     (c.lambda * c.vartheta * c.vartheta * c.n / (c.sigma * c.sigma) +
                      2.0 * (c.n + c.m) * std::log(8.0 * c.n / c.delta * inner));
  const double value = num / ((c.N - 1) * c.epsilon0 * c.epsilon0);
  if (raw) *raw = value;
  if (!(value < 2e9)) throw ConfigError("compute_tau1: tau1 exceeds the integer range");
  return static_cast<int>(std::ceil(value));
}

int practical_tau1(long T, double c) {
  if (T < 1) throw ConfigError("T must be >= 1");
  return std::max(1, static_cast<int>(std::lround(c * std::ceil(std::log(static_cast<double>(T))))));
}

// --- oracle ---------------------------------------------------------------

OracleTable::OracleTable(const SystemInstance& inst, const CostSchedule& costs, int N)
    : subsets_(inst.candidate_subsets()) {
  for (int t = 0; t < costs.rounds(); ++t) entry_of_round_.push_back(costs.entry_index(t));
  for (const auto& c : costs.entries()) {
    std::vector<double> row;
    row.reserve(subsets_.size());
    for (const auto& s : subsets_) {
      const Mat B_S = restrict_input(inst.B, s);
      const auto sched = riccati_backward(inst.A, B_S, c.Q, c.Qf, restrict_cost(c.R, s), N);
      row.push_back(optimal_expected_cost(sched, inst.sigma));
    }
    by_entry_.push_back(std::move(row));
  }
}

double OracleTable::optimum(int t) const {
  const auto& row = costs(t);
  return *std::min_element(row.begin(), row.end());
}

int OracleTable::best_subset(int t) const {
  const auto& row = costs(t);
  return static_cast<int>(std::min_element(row.begin(), row.end()) - row.begin());
}

std::map<std::string, double> oracle_round_costs(const SystemInstance& inst,
                                                 const CostSchedule& costs, int t, int N) {
  const CostMatrices& c = costs.at(t);
  std::map<std::string, double> out;
  for (const auto& s : inst.candidate_subsets()) {
    const auto sched =
        riccati_backward(inst.A, restrict_input(inst.B, s), c.Q, c.Qf, restrict_cost(c.R, s), N);
    out[s.label()] = optimal_expected_cost(sched, inst.sigma);
  }
  return out;
}

// --- control synthesis ----------------------------------------------------

namespace {

CeGains fallback_gains(const SystemInstance& inst, const ActuatorSubset& subset, int N) {
  int best = 0;
  int best_overlap = -1;
  for (int j = 0; j < inst.groups(); ++j) {
    int overlap = 0;
    for (int idx : subset.indices)
      overlap += std::count(inst.partition[j].begin(), inst.partition[j].end(), idx) > 0;
    if (overlap > best_overlap) {
      best = j;
      best_overlap = overlap;
    }
  }
  const ActuatorSubset g = inst.group_subset(best);
  const Mat& KG = inst.stabilizing_gains[best];
  Mat K = Mat::Zero(subset.input_dim(), inst.n);
  for (int r = 0; r < subset.input_dim(); ++r) {
    const auto it = std::find(g.columns.begin(), g.columns.end(), subset.columns[r]);
    if (it != g.columns.end()) K.row(r) = KG.row(it - g.columns.begin());
  }
  return {std::vector<Mat>(N, K), true};
}

}  // namespace

CeGains synthesize_ce_gains(const SystemInstance& inst, const Estimate& est,
                            const ActuatorSubset& subset, const CostMatrices& cost, int N) {
  const Mat B_S = restrict_input(est.B_hat, subset);
  if (!est.A_hat.allFinite() || !B_S.allFinite()) return fallback_gains(inst, subset, N);
  try {
    auto sched = riccati_backward(est.A_hat, B_S, cost.Q, cost.Qf, restrict_cost(cost.R, subset), N);
    for (const auto& K : sched.gains)
      if (!K.allFinite()) return fallback_gains(inst, subset, N);
    return {std::move(sched.gains), false};
  } catch (const NumericalError&) {
    return fallback_gains(inst, subset, N);
  }
}

Estimate exact_estimate(const SystemInstance& inst, double lambda, int epoch) {
  Estimate est;
  est.A_hat = inst.A;
  est.B_hat = inst.B;
  est.lambda = lambda;
  est.epoch = epoch;
  for (int j = 0; j < inst.groups(); ++j) {
    GroupFit g;
    g.group = inst.group_subset(j);
    g.theta = true_theta(inst, j);
    g.V = lambda * Mat::Identity(g.theta.cols(), g.theta.cols());
    est.groups.push_back(std::move(g));
  }
  return est;
}

// --- run ------------------------------------------------------------------

double RegretReport::control_regret() const {
  double r = 0.0;
  for (const auto& rec : rounds)
    if (rec.phase == Phase::kControl) r += rec.realized_cost - rec.oracle_cost;
  return r;
}

std::vector<double> RegretReport::regret_per_round() const {
  std::vector<double> out;
  out.reserve(rounds.size());
  double cum = 0.0;
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    cum += rounds[i].realized_cost - rounds[i].oracle_cost;
    out.push_back(cum / static_cast<double>(i + 1));
  }
  return out;
}

namespace {

/// CE gains and their exact expected cost on the true system, per
/// (cost entry, action), valid for one epoch's estimate.
class CeCache {
 public:
  CeCache(const SystemInstance& inst, const CostSchedule& costs, const OracleTable& oracle, int N)
      : inst_(inst), costs_(costs), oracle_(oracle), N_(N) {}

  void reset(const Estimate* est) {
    est_ = est;
    cache_.clear();
  }

  const std::pair<CeGains, double>& get(int t, int action) {
    const int entry = costs_.entry_index(t);
    const auto key = std::make_pair(entry, action);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const ActuatorSubset& s = oracle_.subsets()[action];
    const CostMatrices& c = costs_.at(t);
    CeGains g = synthesize_ce_gains(inst_, *est_, s, c, N_);
    const double value = evaluate_policy(inst_.A, restrict_input(inst_.B, s), g.gains, c.Q, c.Qf,
                                         restrict_cost(c.R, s), inst_.sigma)
                             .expected_cost;
    return cache_.emplace(key, std::make_pair(std::move(g), value)).first->second;
  }

 private:
  const SystemInstance& inst_;
  const CostSchedule& costs_;
  const OracleTable& oracle_;
  int N_;
  const Estimate* est_ = nullptr;
  std::map<std::pair<int, int>, std::pair<CeGains, double>> cache_;
};

void check_consistent(const SystemInstance& inst, const CostSchedule& costs, const RunConfig& cfg) {
  if (costs.rounds() < cfg.T)
    throw ConfigError("cost schedule has " + std::to_string(costs.rounds()) + " rounds, T = " +
                      std::to_string(cfg.T));
  for (const auto& e : costs.entries())
    if (e.Q.rows() != inst.n || e.R.rows() != inst.m())
      throw ConfigError("cost schedule dimensions do not match the instance");
  if (cfg.N < 1) throw ConfigError("N must be >= 1");
}

}  // namespace

RegretReport run_algorithm1(const SystemInstance& inst, const CostSchedule& costs,
                            const RunConfig& cfg) {
  check_consistent(inst, costs, cfg);
  const int tau1 = cfg.tau1.value_or(practical_tau1(cfg.T, cfg.tau1_c));
  RegretReport rep;
  rep.schedule = build_schedule(cfg.T, tau1, inst.groups());

  const OracleTable oracle(inst, costs, cfg.N);
  const long control_rounds = cfg.T - rep.schedule.estimation_rounds();
  BanditState bandit = exp3s_init(inst.q, inst.H, std::max(1L, control_rounds), cfg.bandit);
  Rng bandit_rng = make_stream(cfg.seed, 0, Stream::kBandit);
  GramAccumulator gram(inst);
  CeCache cache(inst, costs, oracle, cfg.N);

  std::vector<int> best_sequence;
  rep.rounds.reserve(cfg.T);
  for (int i = 0; i < rep.schedule.n_e; ++i) {
    const Epoch& ep = rep.schedule.epochs[i];
    for (long t = ep.est_begin; t < ep.ctrl_begin; ++t) {
      const int j = static_cast<int>((t - ep.est_begin) / tau1);
      Rng rng = make_stream(cfg.seed, t, Stream::kDynamics);
      const auto tr = rollout_exploration(inst, j, costs.at(t), cfg.N, static_cast<int>(t), rng);
      gram.add(j, tr);
      RoundRecord rec;
      rec.t = t;
      rec.epoch = i;
      rec.phase = Phase::kEstimation;
      rec.subset = tr.subset;
      rec.realized_cost = tr.realized_cost;
      rec.oracle_cost = oracle.optimum(static_cast<int>(t));
      rec.expected_cost = std::nan("");
      rep.rounds.push_back(std::move(rec));
      best_sequence.push_back(oracle.best_subset(static_cast<int>(t)));
    }
    rep.estimates.push_back(cfg.oracle_estimator ? exact_estimate(inst, cfg.lambda, i + 1)
                                                 : gram.fit(cfg.lambda, i + 1));
    cache.reset(&rep.estimates.back());
    for (long t = ep.ctrl_begin; t < ep.end; ++t) {
      const int ti = static_cast<int>(t);
      const int a = exp3s_sample(bandit, bandit_rng);
      const auto& [ce, expected] = cache.get(ti, a);
      Rng rng = make_stream(cfg.seed, t, Stream::kDynamics);
      const auto tr = rollout_gain_policy(inst, oracle.subsets()[a], ce.gains, costs.at(ti), ti, rng);
      exp3s_update(bandit, a, tr.realized_cost);
      RoundRecord rec;
      rec.t = t;
      rec.epoch = i;
      rec.phase = Phase::kControl;
      rec.subset = tr.subset;
      rec.action = a;
      rec.realized_cost = tr.realized_cost;
      rec.oracle_cost = oracle.optimum(ti);
      rec.expected_cost = expected;
      rec.fallback = ce.fallback;
      rep.fallbacks += ce.fallback;
      rep.rounds.push_back(std::move(rec));
      best_sequence.push_back(oracle.best_subset(ti));
    }
  }

  for (const auto& r : rep.rounds) {
    rep.cumulative_cost += r.realized_cost;
    rep.j_star += r.oracle_cost;
  }
  rep.regret = rep.cumulative_cost - rep.j_star;
  rep.oracle_hardness = hardness(best_sequence);
  rep.final_y_b = bandit.y_b;
  return rep;
}

Decomposition regret_decomposition(const RegretReport& report, const SystemInstance& inst,
                                   const CostSchedule& costs, int N) {
  if (static_cast<int>(report.estimates.size()) != report.schedule.n_e)
    throw ConfigError("regret_decomposition: expected " + std::to_string(report.schedule.n_e) +
                      " epoch estimates, got " + std::to_string(report.estimates.size()));
  const OracleTable oracle(inst, costs, N);
  CeCache cache(inst, costs, oracle, N);
  Decomposition d;
  int current_epoch = -1;
  for (const auto& r : report.rounds) {
    const int t = static_cast<int>(r.t);
    if (r.phase == Phase::kEstimation) {
      d.R1 += r.realized_cost - oracle.optimum(t);
      continue;
    }
    if (r.epoch != current_epoch) {
      current_epoch = r.epoch;
      cache.reset(&report.estimates.at(r.epoch));
    }
    const int star = oracle.best_subset(t);
    const double played = cache.get(t, r.action).second;
    const double best_ce = cache.get(t, star).second;
    d.R2 += played - best_ce;
    d.R3 += r.realized_cost - played;
    d.R4 += best_ce - oracle.optimum(t);
  }
  if (std::abs(d.total() - report.regret) > 1e-6 * std::max(1.0, std::abs(report.regret)))
    throw NumericalError("regret_decomposition: terms sum to " + std::to_string(d.total()) +
                         ", regret is " + std::to_string(report.regret));
  return d;
}

void write_report_csv(std::ostream& os, const RegretReport& report) {
  os << "t,phase,subset,realized_cost,oracle_cost,cum_regret\n";
  double cum = 0.0;
  char buf[160];
  for (const auto& r : report.rounds) {
    cum += r.realized_cost - r.oracle_cost;
    std::snprintf(buf, sizeof buf, "%ld,%s,\"%s\",%.17g,%.17g,%.17g\n", r.t + 1,
                  r.phase == Phase::kEstimation ? "estimation" : "control", r.subset.label().c_str(),
                  r.realized_cost, r.oracle_cost, cum);
    os << buf;
  }
}

}  // namespace actsel
