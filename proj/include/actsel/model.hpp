#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "actsel/linalg.hpp"

namespace actsel {

/// A size-H selection of candidate actuators. Indices are 0-based and
/// strictly increasing; `columns` lists the matching columns of B (and the
/// rows/columns of R) in index order.
struct ActuatorSubset {
  std::vector<int> indices;
  std::vector<int> columns;

  int size() const { return static_cast<int>(indices.size()); }
  int input_dim() const { return static_cast<int>(columns.size()); }
  bool operator==(const ActuatorSubset&) const = default;

  /// 1-based brace form, e.g. "{1,3}".
  std::string label() const;
};

/// Builds a subset and its column span; throws ConfigError on out-of-range or
/// non-increasing indices.
ActuatorSubset make_subset(std::vector<int> indices, std::span<const int> block_widths);

/// Number of size-h subsets of q items. Throws ConfigError above `cap`.
std::uint64_t binomial(int q, int h, std::uint64_t cap = 1'000'000);

/// All size-h subsets of {0..q-1} in lexicographic order.
std::vector<std::vector<int>> all_subsets(int q, int h);

/// Contiguous groups of at most h actuators covering {0..q-1}.
std::vector<std::vector<int>> default_partition(int q, int h);

/// Ground truth for one experiment. Hidden from the learner apart from the
/// stabilizing gains, the partition and kappa.
struct SystemInstance {
  int n = 0;
  int q = 0;
  int H = 0;
  std::vector<int> block_widths;
  Mat A;
  Mat B;
  double sigma = 1.0;
  std::vector<std::vector<int>> partition;
  std::vector<Mat> stabilizing_gains;
  double kappa = 1.0;
  int ell = 1;
  double nu = 0.0;
  double zeta0 = 1.0;
  double eta0 = 0.5;
  std::uint64_t seed = 0;

  int m() const;
  int groups() const { return static_cast<int>(partition.size()); }
  ActuatorSubset subset(std::vector<int> indices) const;
  ActuatorSubset group_subset(int j) const;
  std::vector<ActuatorSubset> candidate_subsets() const;
};

/// Checks every SystemInstance invariant; throws ConfigError naming the first
/// violated one.
void validate_instance(const SystemInstance& inst);

struct GeneratorParams {
  int n = 3;
  int q = 4;
  std::vector<int> block_widths;  // empty -> all ones
  int H = 2;
  double spectral_radius_target = 1.1;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  int max_retries = 200;
};

/// Random instance: A, B with i.i.d. standard normal entries, A rescaled to the
/// target spectral radius, redrawn until every size-H subset is controllable
/// within depth n and every partition group admits a stabilizing gain.
/// Deterministic in the seed.
SystemInstance generate_random_instance(const GeneratorParams& params);

/// [B, AB, ..., A^{ell-1}B].
Mat controllability_matrix(const Mat& A, const Mat& B_S, int ell);

/// n-th singular value of the depth-ell controllability matrix (0 when rank
/// deficient or when the matrix has fewer than n columns).
double controllability_margin(const Mat& A, const Mat& B_S, int ell);

struct DareSolution {
  Mat P;
  Mat K;
  int iterations = 0;
};

/// Infinite-horizon Riccati fixed point by iterating the backward recursion
/// until ||P_{i+1} - P_i|| < tol. Throws NumericalError on non-convergence.
DareSolution solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                        double tol = 1e-10, int max_iter = 10'000);

/// Gain of solve_dare, post-checked for rho(A + BK) < 1.
Mat compute_stabilizing_gain(const Mat& A, const Mat& B_G, const Mat& Q, const Mat& R_G);

/// Column-block restriction B_S.
Mat restrict_input(const Mat& B, const ActuatorSubset& s);
/// Principal submatrix R_S.
Mat restrict_cost(const Mat& R, const ActuatorSubset& s);

/// Measured (zeta, eta) with ||M^k|| <= zeta * eta^k for k in [0, k_max],
/// over all matrices supplied. eta = (1 + max spectral radius) / 2.
std::pair<double, double> fit_power_decay(std::span<const Mat> closed_loops, int k_max = 400);

// --- cost schedule --------------------------------------------------------

struct CostMatrices {
  Mat Q;
  Mat Qf;
  Mat R;
};

/// Per-round cost matrices. Rounds are 0-based; rounds sharing matrices
/// share one stored entry.
class CostSchedule {
 public:
  CostSchedule(std::vector<CostMatrices> entries, std::vector<int> round_to_entry);

  /// Q = q_scale I, Q_f = qf_scale I, R = r_scale I for every round.
  static CostSchedule identity_family(int n, int m, int rounds, double q_scale = 1.0,
                                      double qf_scale = 2.0, double r_scale = 1.0);

  /// Q = I, Q_f = 2I, R = diag over actuators of
  /// 1 + amplitude * (1 + sin(2 pi t / period + phase_i)) / 2 with phase_i
  /// spread over the actuators, so the best subset changes across rounds.
  static CostSchedule sinusoidal(int n, std::span<const int> block_widths, int rounds,
                                 double amplitude, int period);

  int rounds() const { return static_cast<int>(round_to_entry_.size()); }
  const CostMatrices& at(int t) const { return entries_.at(round_to_entry_.at(t)); }
  int entry_index(int t) const { return round_to_entry_.at(t); }
  const std::vector<CostMatrices>& entries() const { return entries_; }
  double sigma_Q() const { return sigma_Q_; }
  double sigma_R() const { return sigma_R_; }

 private:
  std::vector<CostMatrices> entries_;
  std::vector<int> round_to_entry_;
  double sigma_Q_ = 0.0;
  double sigma_R_ = 0.0;
};

// --- serialization --------------------------------------------------------

std::string serialize_instance(const SystemInstance& inst);
SystemInstance parse_instance(const std::string& text);
void save_instance(const SystemInstance& inst, const std::filesystem::path& path);
SystemInstance load_instance(const std::filesystem::path& path);

}  // namespace actsel
