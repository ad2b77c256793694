#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "actsel/bandit.hpp"
#include "actsel/lqr.hpp"
#include "actsel/model.hpp"
#include "actsel/sysid.hpp"

namespace actsel {

// --- schedule -------------------------------------------------------------

/// Round ranges [est_begin, ctrl_begin) and [ctrl_begin, end) of one epoch,
/// 0-based. Estimation rounds run groups 0..p-1 in order, tau1 rounds each.
struct Epoch {
  long est_begin = 0;
  long ctrl_begin = 0;
  long end = 0;
};

struct EpochSchedule {
  long T = 0;
  int tau1 = 0;
  long tau2 = 0;
  int n_e = 0;
  int p = 0;
  std::vector<Epoch> epochs;

  long estimation_rounds() const { return static_cast<long>(n_e) * tau1 * p; }
};

/// n_e = ceil(sqrt(T) / (tau1 p)), tau2 = floor((T - n_e tau1 p) / n_e); the
/// remainder goes to the last control phase. Throws InfeasibleSchedule when
/// T <= tau1 p or the estimation rounds alone exceed T.
EpochSchedule build_schedule(long T, int tau1, int p);

struct Tau1Constants {
  int n = 0;
  int m = 0;
  int p = 0;
  int N = 0;
  long T = 0;
  double lambda = 1.0;
  double sigma = 1.0;
  double vartheta = 0.0;  // max(||A||, ||B||)
  double epsilon0 = 0.0;
  double delta = 0.1;
  double zeta0 = 1.0;
  double eta0 = 0.5;
  double kappa = 1.0;
};

/// 20 zeta0^2 (1+kappa)^2 sigma^2 / (1-eta0)^2 (2(vartheta^2+1) kappa^2 m + n) log(8NT/delta).
double state_bound_zb(const Tau1Constants& c);

/// Analytic tau1 (unrounded value is returned through `raw` if given).
int compute_tau1(const Tau1Constants& c, double* raw = nullptr);

/// c * ceil(ln T), at least 1.
int practical_tau1(long T, double c);

// --- oracle ---------------------------------------------------------------

/// J_t(S) for every candidate subset, in bandit index order, computed once per
/// distinct cost entry.
class OracleTable {
 public:
  OracleTable(const SystemInstance& inst, const CostSchedule& costs, int N);

  const std::vector<double>& costs(int t) const { return by_entry_.at(entry_of_round_.at(t)); }
  double optimum(int t) const;
  int best_subset(int t) const;
  const std::vector<ActuatorSubset>& subsets() const { return subsets_; }

 private:
  std::vector<int> entry_of_round_;
  std::vector<ActuatorSubset> subsets_;
  std::vector<std::vector<double>> by_entry_;
};

/// Map subset label -> J_t(S) for one round.
std::map<std::string, double> oracle_round_costs(const SystemInstance& inst,
                                                 const CostSchedule& costs, int t, int N);

// --- control synthesis ----------------------------------------------------

struct CeGains {
  std::vector<Mat> gains;
  bool fallback = false;
};

/// Riccati gains on (A_hat, B_hat_S). If the estimate is non-finite or the
/// recursion breaks down, falls back to the stabilizing gain of the partition
/// group sharing the most actuators with S, with zero rows for actuators of S
/// outside that group.
CeGains synthesize_ce_gains(const SystemInstance& inst, const Estimate& est,
                            const ActuatorSubset& subset, const CostMatrices& cost, int N);

/// Estimate carrying the true (A, B), with Gram matrices lambda I.
Estimate exact_estimate(const SystemInstance& inst, double lambda, int epoch);

// --- run ------------------------------------------------------------------

struct RunConfig {
  long T = 200;
  int N = 5;
  std::optional<int> tau1;  // unset -> practical_tau1(T, tau1_c)
  double tau1_c = 1.0;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  BanditOptions bandit;
  bool oracle_estimator = false;  // replace LSE with the true (A, B)
};

enum class Phase { kEstimation, kControl };

struct RoundRecord {
  long t = 0;  // 0-based
  int epoch = 0;
  Phase phase = Phase::kEstimation;
  ActuatorSubset subset;
  int action = -1;               // bandit index in control rounds
  double realized_cost = 0.0;
  double oracle_cost = 0.0;      // min_S J_t(S)
  double expected_cost = 0.0;    // exact expectation of the played policy (control rounds)
  bool fallback = false;
};

struct Decomposition {
  double R1 = 0.0;  // estimation rounds: realized - oracle
  double R2 = 0.0;  // control: E[cost of played CE policy] - E[cost of CE policy on S*]
  double R3 = 0.0;  // control: realized - E[cost of played policy]
  double R4 = 0.0;  // control: E[cost of CE policy on S*] - J_t(S*)
  double total() const { return R1 + R2 + R3 + R4; }
};

struct RegretReport {
  EpochSchedule schedule;
  std::vector<RoundRecord> rounds;
  std::vector<Estimate> estimates;  // one per epoch, as used in its control phase
  double cumulative_cost = 0.0;
  double j_star = 0.0;
  double regret = 0.0;
  int oracle_hardness = 1;  // h of the per-round best-subset sequence
  int fallbacks = 0;
  double final_y_b = 0.0;

  double control_regret() const;
  std::vector<double> regret_per_round() const;  // R_A(T') / T' for T' = 1..T
};

RegretReport run_algorithm1(const SystemInstance& inst, const CostSchedule& costs,
                            const RunConfig& cfg);

/// Recomputes the four terms from the report and its per-epoch estimates and
/// checks they sum to R_A within 1e-6 relative (NumericalError otherwise).
/// The R2/R3 split is a convention: R2 is the expected-cost gap of the played
/// CE policy over the CE policy of the best subset.
Decomposition regret_decomposition(const RegretReport& report, const SystemInstance& inst,
                                   const CostSchedule& costs, int N);

/// Columns t,phase,subset,realized_cost,oracle_cost,cum_regret (t 1-based).
void write_report_csv(std::ostream& os, const RegretReport& report);

}  // namespace actsel
