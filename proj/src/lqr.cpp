#include "actsel/lqr.hpp"

#include <cmath>
#include <string>

#include "actsel/errors.hpp"

namespace actsel {

namespace {

void check_dims(const Mat& A, const Mat& B_S, const Mat& Q, const Mat& Qf, const Mat& R_S) {
  const auto n = A.rows();
  if (A.cols() != n || B_S.rows() != n || Q.rows() != n || Q.cols() != n || Qf.rows() != n ||
      Qf.cols() != n || R_S.rows() != B_S.cols() || R_S.cols() != B_S.cols())
    throw ConfigError("lqr: inconsistent matrix dimensions");
}

}  // namespace

GainSchedule riccati_backward(const Mat& A, const Mat& B_S, const Mat& Q, const Mat& Qf,
                              const Mat& R_S, int N) {
  if (N < 1) throw ConfigError("horizon N must be >= 1");
  check_dims(A, B_S, Q, Qf, R_S);
  GainSchedule out;
  out.gains.resize(N);
  out.values.resize(N + 1);
  out.values[N] = Qf;
  for (int k = N - 1; k >= 0; --k) {
    const Mat& next = out.values[k + 1];
    const Mat BtP = B_S.transpose() * next;
    Eigen::LLT<Mat> llt(BtP * B_S + R_S);
    if (llt.info() != Eigen::Success || !BtP.allFinite())
      throw NumericalError("riccati_backward: B'P B + R not positive definite at step k=" +
                           std::to_string(k));
    out.gains[k] = -llt.solve(BtP * A);
    out.values[k] = symmetrize(Q + A.transpose() * next * A + (BtP * A).transpose() * out.gains[k]);
  }
  return out;
}

double optimal_expected_cost(const GainSchedule& schedule, double sigma) {
  double trace_sum = 0.0;
  for (int k = 1; k <= schedule.horizon(); ++k) trace_sum += schedule.values[k].trace();
  return sigma * sigma * trace_sum;
}

PolicyValue evaluate_policy(const Mat& A, const Mat& B_S, const std::vector<Mat>& gains,
                            const Mat& Q, const Mat& Qf, const Mat& R_S, double sigma) {
  check_dims(A, B_S, Q, Qf, R_S);
  const int N = static_cast<int>(gains.size());
  PolicyValue out;
  out.values.resize(N + 1);
  out.values[N] = Qf;
  double trace_sum = 0.0;
  for (int k = N - 1; k >= 0; --k) {
    const Mat& K = gains[k];
    if (K.rows() != B_S.cols() || K.cols() != A.rows())
      throw ConfigError("evaluate_policy: gain " + std::to_string(k) + " has wrong shape");
    const Mat L = A + B_S * K;
    out.values[k] = symmetrize(Q + K.transpose() * R_S * K + L.transpose() * out.values[k + 1] * L);
    trace_sum += out.values[k + 1].trace();
  }
  out.expected_cost = sigma * sigma * trace_sum;
  return out;
}

std::vector<Mat> state_covariances(const Mat& A, const Mat& B_S, const std::vector<Mat>& gains,
                                   double sigma) {
  const auto n = A.rows();
  const Mat W = sigma * sigma * Mat::Identity(n, n);
  std::vector<Mat> cov(gains.size() + 1);
  cov[0] = Mat::Zero(n, n);
  for (std::size_t k = 0; k < gains.size(); ++k) {
    const Mat L = A + B_S * gains[k];
    cov[k + 1] = symmetrize(L * cov[k] * L.transpose() + W);
  }
  return cov;
}

CostGap cost_gap_both(const Mat& A, const Mat& B_S, const GainSchedule& optimal,
                      const GainSchedule& ce, const Mat& Q, const Mat& R_S, double sigma) {
  if (optimal.horizon() != ce.horizon()) throw ConfigError("cost_gap: horizons differ");
  const Mat& Qf = optimal.values.back();
  CostGap gap;
  gap.by_evaluation = evaluate_policy(A, B_S, ce.gains, Q, Qf, R_S, sigma).expected_cost -
                      optimal_expected_cost(optimal, sigma);

  const auto cov = state_covariances(A, B_S, ce.gains, sigma);
  double sum = 0.0;
  for (int k = 0; k < ce.horizon(); ++k) {
    const Mat dK = ce.gains[k] - optimal.gains[k];
    const Mat weight = R_S + B_S.transpose() * optimal.values[k + 1] * B_S;
    sum += (dK.transpose() * weight * dK * cov[k]).trace();
  }
  gap.by_gain_error = sum;

  if (std::abs(gap.by_evaluation - gap.by_gain_error) > 1e-8 * (1.0 + std::abs(gap.by_evaluation)))
    throw NumericalError("cost_gap: evaluation route " + std::to_string(gap.by_evaluation) +
                         " disagrees with gain-error route " + std::to_string(gap.by_gain_error));
  return gap;
}

double cost_gap(const Mat& A, const Mat& B_S, const GainSchedule& optimal, const GainSchedule& ce,
                const Mat& Q, const Mat& R_S, double sigma) {
  return cost_gap_both(A, B_S, optimal, ce, Q, R_S, sigma).by_evaluation;
}

double riccati_residual(const GainSchedule& s, const Mat& A, const Mat& B_S, const Mat& Q,
                        const Mat& R_S) {
  double worst = 0.0;
  for (int k = 0; k < s.horizon(); ++k) {
    const Mat& next = s.values[k + 1];
    const Mat H = B_S.transpose() * next * B_S + R_S;
    const Mat K = -H.ldlt().solve(B_S.transpose() * next * A);
    worst = std::max(worst, (s.gains[k] - K).norm());
    const Mat P = Q + A.transpose() * next * (A + B_S * s.gains[k]);
    worst = std::max(worst, (s.values[k] - P).norm());
  }
  return worst;
}

}  // namespace actsel
