#pragma once

#include <optional>
#include <vector>

#include "actsel/linalg.hpp"
#include "actsel/model.hpp"

namespace actsel {

/// Time-indexed gains K_0..K_{N-1} and value matrices P_0..P_N of one
/// finite-horizon problem. Built from either the true or an estimated model.
struct GainSchedule {
  std::vector<Mat> gains;   // N entries, each m_S x n
  std::vector<Mat> values;  // N + 1 entries, each n x n; values.back() == Q_f
  std::optional<ActuatorSubset> subset;
  int round = -1;

  int horizon() const { return static_cast<int>(gains.size()); }
};

/// Value of running an arbitrary gain schedule on the true system.
struct PolicyValue {
  std::vector<Mat> values;  // P~_0..P~_N
  double expected_cost = 0.0;
};

/// Backward Riccati recursion from P_N = Q_f. Each inner solve uses an LLT of
/// B'P_{k+1}B + R_S; a failed factorization throws NumericalError naming k.
GainSchedule riccati_backward(const Mat& A, const Mat& B_S, const Mat& Q, const Mat& Qf,
                              const Mat& R_S, int N);

/// sigma^2 * sum_{k<N} Tr(P_{k+1}); valid when the schedule came from the
/// true system and x_0 = 0.
double optimal_expected_cost(const GainSchedule& schedule, double sigma);

/// P~_k = Q + K_k'R K_k + (A + B K_k)' P~_{k+1} (A + B K_k), P~_N = Q_f, on the
/// true (A, B_S), together with sigma^2 * sum Tr(P~_{k+1}).
PolicyValue evaluate_policy(const Mat& A, const Mat& B_S, const std::vector<Mat>& gains,
                            const Mat& Q, const Mat& Qf, const Mat& R_S, double sigma);

/// E[x_k x_k'] under x_{k+1} = (A + B K_k) x_k + w_k, x_0 = 0. Returns N + 1
/// covariances.
std::vector<Mat> state_covariances(const Mat& A, const Mat& B_S, const std::vector<Mat>& gains,
                                   double sigma);

struct CostGap {
  double by_evaluation = 0.0;  // evaluate_policy - optimal_expected_cost
  double by_gain_error = 0.0;  // sum_k E[x'dK'(R + B'P_{k+1}B)dK x]
};

/// Excess expected cost of `ce` over `optimal` on the true system, computed
/// two independent ways. Throws NumericalError if they disagree by more than
/// 1e-8 * (1 + |gap|).
CostGap cost_gap_both(const Mat& A, const Mat& B_S, const GainSchedule& optimal,
                      const GainSchedule& ce, const Mat& Q, const Mat& R_S, double sigma);

/// The evaluation-route value of cost_gap_both.
double cost_gap(const Mat& A, const Mat& B_S, const GainSchedule& optimal, const GainSchedule& ce,
                const Mat& Q, const Mat& R_S, double sigma);

/// Residual of the Riccati identities for a schedule: max over k of
/// ||K_k + (B'P_{k+1}B + R)^{-1}B'P_{k+1}A|| and ||P_k - (Q + A'P_{k+1}(A + B K_k))||.
double riccati_residual(const GainSchedule& s, const Mat& A, const Mat& B_S, const Mat& Q,
                        const Mat& R_S);

}  // namespace actsel
