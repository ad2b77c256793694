#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "actsel/lqr.hpp"
#include "actsel/model.hpp"
#include "actsel/sim.hpp"
#include "actsel/sysid.hpp"

namespace actsel {

// --- constants ------------------------------------------------------------

struct SubsetConstants {
  ActuatorSubset subset;
  double B_norm = 0.0;  // ||B_S||
  double Gamma = 0.0;   // max over rounds and k in 1..N of max{||A||, ||B||, ||P_k||, ||K_{k-1}||}
  double Gamma_tilde = 1.0;
  double zeta = 1.0;    // ||Psi_{k2,k1}|| <= zeta eta^{k2-k1} over all pairs and rounds
  double eta = 0.5;
  double epsilon0_term = 0.0;  // cost-gap hypothesis threshold for this subset
};

struct ConstantsProfile {
  int n = 0;
  int N = 0;
  int ell = 1;
  double nu = 0.0;
  double sigma = 1.0;
  double sigma_Q = 1.0;
  double sigma_R = 1.0;
  double norm_A = 0.0;
  double vartheta = 0.0;  // max(||A||, ||B||)
  double kappa_hat = 0.0;
  double zeta = 1.0;      // max over subsets
  double eta = 0.5;       // max over subsets
  double epsilon0 = 0.0;  // min over subsets of epsilon0_term
  double zeta0 = 1.0;
  double eta0 = 0.5;
  std::vector<SubsetConstants> subsets;

  /// max(1, eps + ||A||).
  double beta(double eps) const;
  /// 32 ell^{5/2} beta^{2(ell-1)} (1 + 1/nu) Gamma~^3 max(sigma_Q, sigma_R).
  double mu(const SubsetConstants& s, double eps) const;
  /// (20 Gamma~^9 sigma_R)^{ell-1} mu_S: the value-matrix error per unit eps.
  double value_error_rate(const SubsetConstants& s, double eps) const;
  /// Largest eps allowed by the cost-gap bound's hypothesis, evaluated with beta(eps).
  double cost_gap_threshold(const SubsetConstants& s, double eps) const;
  /// Coefficient c with Jhat - J <= c eps^2.
  double cost_gap_coefficient(const SubsetConstants& s, double eps) const;

  const SubsetConstants& at(const ActuatorSubset& s) const;
};

/// Transition products Psi_{k2,k1} = M_{k2-1} ... M_{k1} for all 0 <= k1 <= k2 <= M.size(),
/// indexed [k1][k2 - k1].
std::vector<std::vector<Mat>> transition_products(const std::vector<Mat>& closed_loops);

/// (zeta, eta) with ||Psi|| <= zeta eta^d over all supplied product tables:
/// eta = (1 + 1e-6) max over gaps d >= ceil(N/2) of ||Psi||^{1/d} (floored at 1e-3),
/// then zeta = (1 + 1e-9) max(1, max ||Psi|| / eta^d). Throws NumericalError if eta >= 1.
std::pair<double, double> fit_transition_decay(
    const std::vector<std::vector<std::vector<Mat>>>& tables);

/// Throws NumericalError when some subset's finite-horizon closed loop is not
/// contracting (eta_S >= 1).
ConstantsProfile estimate_constants(const SystemInstance& inst, const CostSchedule& costs, int N);

/// N (sigma_Q + kappa_hat^2 sigma_R) 4 zeta^2 sigma^2 / (1 - eta)^2 5n log(8NT/delta).
double cost_ceiling(const ConstantsProfile& c, long T, double delta);

// --- reports --------------------------------------------------------------

/// Every row reads lhs <= rhs. Rows whose hypothesis fails are never violations.
struct BoundRow {
  std::string lemma;
  std::string subset;
  double epsilon = 0.0;
  int k = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool hypothesis_ok = true;
  bool bound_ok = true;
};

struct BoundReport {
  std::vector<BoundRow> rows;

  void add(BoundRow row);
  void append(const BoundReport& other);
  /// Hypothesis-satisfying rows with bound_ok == false. Probabilistic lemmas
  /// (lemma7, lemma9) are excluded unless `include_probabilistic`.
  long violations(bool include_probabilistic = false) const;
  long checked(const std::string& lemma_prefix = "") const;
};

bool is_probabilistic(const std::string& lemma);

/// Columns lemma,subset,epsilon,k,lhs,rhs,hypothesis_ok,bound_ok.
void write_bounds_csv(std::ostream& os, const BoundReport& report);

// --- verifiers ------------------------------------------------------------

struct VerifyOptions {
  std::vector<double> epsilons{1e-6, 1e-5, 1e-4, 1e-3};
  int trials = 20;
  std::uint64_t seed = 0;
  /// Multiplies every deterministic rhs; values below 1 inject violations to
  /// exercise the harness.
  double rhs_scale = 1.0;
};

/// Perturbation of (A, B_S) with ||E_A|| = ||E_B|| = eps.
struct Perturbation {
  Mat E_A;
  Mat E_B;
};

/// Trial t uses a random Gaussian direction when t is even and the
/// adversarial rank-one direction (sign alternating) when t is odd. The
/// adversarial direction is the top singular pair of the finite-difference
/// gradient of Tr(P_hat_0) with respect to A and B_S. `cost.R` must already be
/// restricted to the subset (m_S x m_S).
Perturbation make_perturbation(const Mat& A, const Mat& B_S, const CostMatrices& cost, int N,
                               double eps, int trial, Rng& rng);

/// Gain/value one-step bounds (lemma1_K, lemma1_P), the block-step value bound
/// (lemma3_P) and the all-k bounds (prop1_P, prop1_K).
BoundReport verify_gain_value_perturbation(const SystemInstance& inst, const CostSchedule& costs,
                                           const ConstantsProfile& c, const ActuatorSubset& s,
                                           const VerifyOptions& opts);

/// Lower bound on sigma_n of the perturbed controllability matrix (lemma2,
/// stored as lhs = bound, rhs = sigma_n).
BoundReport verify_controllability_perturbation(const SystemInstance& inst,
                                                const ConstantsProfile& c, const ActuatorSubset& s,
                                                const VerifyOptions& opts);

/// Cost-gap bound (prop2), lhs via lqr::cost_gap_both.
BoundReport verify_cost_gap_bound(const SystemInstance& inst, const CostSchedule& costs,
                                  const ConstantsProfile& c, const ActuatorSubset& s,
                                  const VerifyOptions& opts);

/// Least-squares slope of log(gap) against log(eps) along `directions` fixed
/// random directions, averaged over directions.
double cost_gap_slope(const SystemInstance& inst, const CostMatrices& cost, int N,
                      const ActuatorSubset& s, const std::vector<double>& epsilons, int directions,
                      std::uint64_t seed);

/// Transition-product bounds over every (k1, k2): lemma5 (fitted pair), lemma6
/// (CE gains of an eps-perturbed model) and lemma11 (random ||Delta_k|| <= eps).
/// One row per gap d = k2 - k1 carrying the worst pair.
BoundReport verify_transition_bounds(const SystemInstance& inst, const CostSchedule& costs,
                                     const ConstantsProfile& c, const ActuatorSubset& s,
                                     const VerifyOptions& opts);

/// Value-matrix product identity (lemma12_identity, to 1e-8) and the gain
/// convergence bound (lemma12_K) for each horizon in `horizons`.
BoundReport verify_gain_convergence(const SystemInstance& inst, const CostSchedule& costs,
                                    const ActuatorSubset& s, const std::vector<int>& horizons,
                                    double rhs_scale = 1.0);

/// Self-normalized bound (lemma7) for every epoch estimate and group, and the
/// per-epoch norm bound sqrt(eps0^2 / i) (lemma9) whose hypothesis is
/// `tau1_from_theorem`.
BoundReport verify_lse_error_bound(const SystemInstance& inst, const std::vector<Estimate>& estimates,
                                   double delta, double epsilon0, bool tau1_from_theorem);

// --- campaign -------------------------------------------------------------

struct CampaignConfig {
  int instances = 10;
  GeneratorParams generator;  // seed is offset per instance
  int N = 5;
  VerifyOptions verify;
  std::vector<double> slope_epsilons{1e-6, 1e-5, 1e-4};
  int slope_directions = 3;
  int workers = 1;
};

struct CampaignResult {
  BoundReport report;
  std::vector<double> slopes;  // one per (instance, subset)
  int instances_skipped = 0;   // constants not estimable (non-contracting fit)
};

CampaignResult run_bound_campaign(const CampaignConfig& cfg);

struct LseCampaign {
  BoundReport report;                       // lemma7 rows for every seed, epoch, group
  std::vector<std::vector<double>> errors;  // [seed][epoch - 1]: max over groups of ||Delta||
  double lemma7_frequency = 0.0;            // fraction of seeds with no lemma7 violation
};

/// Repeats the estimation phase alone: each epoch adds tau1 exploration
/// rounds per group, then refits on everything so far.
LseCampaign run_lse_campaign(const SystemInstance& inst, int N, int tau1, int epochs, int seeds,
                             double delta, double lambda, std::uint64_t seed, int workers = 1);

/// delta + 3 sqrt(delta (1 - delta) / seeds).
double probabilistic_slack(double delta, int seeds);

}  // namespace actsel
