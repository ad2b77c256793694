#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "actsel/errors.hpp"
#include "actsel/lqr.hpp"
#include "actsel/model.hpp"
#include "oracles.hpp"

using namespace actsel;

namespace {

Mat scalar(double v) { return Mat::Constant(1, 1, v); }

Mat random_matrix(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

Mat random_spd(int n, std::mt19937_64& rng) {
  const Mat M = random_matrix(n, n, rng);
  return M * M.transpose() + 0.5 * Mat::Identity(n, n);
}

}  // namespace

TEST_CASE("scalar Riccati closed form") {
  const auto s = riccati_backward(scalar(1), scalar(1), scalar(1), scalar(1), scalar(1), 1);
  CHECK(s.gains[0](0, 0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(s.values[0](0, 0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(s.values[1](0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  for (double sigma : {0.3, 1.0, 2.0})
    CHECK(optimal_expected_cost(s, sigma) == doctest::Approx(sigma * sigma).epsilon(1e-12));
}

TEST_CASE("Riccati matches loop oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 3, m = 1 + trial % 2, N = 1 + trial % 6;
    const Mat A = random_matrix(n, n, rng, 0.7), B = random_matrix(n, m, rng);
    const Mat Q = random_spd(n, rng), Qf = random_spd(n, rng), R = random_spd(m, rng);
    const auto s = riccati_backward(A, B, Q, Qf, R, N);
    const auto o = oracle::riccati(A, B, Q, Qf, R, N);
    REQUIRE(s.horizon() == N);
    for (int k = 0; k < N; ++k) {
      CHECK((s.gains[k] - o.K[k]).norm() <= 1e-10 * (1 + o.K[k].norm()));
      CHECK((s.values[k] - o.P[k]).norm() <= 1e-10 * (1 + o.P[k].norm()));
    }
    CHECK(riccati_residual(s, A, B, Q, R) < 1e-9);
  }
}

TEST_CASE("policy evaluation of the optimal schedule equals the optimal cost") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 3, m = 1 + trial % 3, N = 2 + trial % 5;
    const Mat A = random_matrix(n, n, rng), B = random_matrix(n, m, rng);
    const Mat Q = random_spd(n, rng), Qf = random_spd(n, rng), R = random_spd(m, rng);
    const double sigma = 0.5 + 0.1 * trial;
    const auto s = riccati_backward(A, B, Q, Qf, R, N);
    const double Jstar = optimal_expected_cost(s, sigma);
    const auto pv = evaluate_policy(A, B, s.gains, Q, Qf, R, sigma);
    CHECK(pv.expected_cost == doctest::Approx(Jstar).epsilon(1e-10));
    CHECK(oracle::expected_cost(A, B, s.gains, Q, Qf, R, sigma) == doctest::Approx(Jstar).epsilon(1e-10));
  }
}

TEST_CASE("arbitrary gains: evaluation matches covariance oracle and never beats the optimum") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2, m = 2, N = 4;
    const Mat A = random_matrix(n, n, rng, 0.6), B = random_matrix(n, m, rng);
    const Mat Q = random_spd(n, rng), Qf = random_spd(n, rng), R = random_spd(m, rng);
    std::vector<Mat> K;
    for (int k = 0; k < N; ++k) K.push_back(random_matrix(m, n, rng, 0.3));
    const double J = evaluate_policy(A, B, K, Q, Qf, R, 1.3).expected_cost;
    CHECK(J == doctest::Approx(oracle::expected_cost(A, B, K, Q, Qf, R, 1.3)).epsilon(1e-10));
    CHECK(J >= optimal_expected_cost(riccati_backward(A, B, Q, Qf, R, N), 1.3) - 1e-9);
  }
}

TEST_CASE("cost gap routes agree") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 3, m = 1 + trial % 2, N = 3;
    const Mat A = random_matrix(n, n, rng, 0.8), B = random_matrix(n, m, rng);
    const Mat Q = random_spd(n, rng), Qf = random_spd(n, rng), R = random_spd(m, rng);
    const auto opt = riccati_backward(A, B, Q, Qf, R, N);
    const auto ce = riccati_backward(A + random_matrix(n, n, rng, 0.05), B + random_matrix(n, m, rng, 0.05),
                                     Q, Qf, R, N);
    const auto gap = cost_gap_both(A, B, opt, ce, Q, R, 0.9);
    CHECK(gap.by_evaluation >= -1e-10);
    CHECK(std::abs(gap.by_evaluation - gap.by_gain_error) <= 1e-8 * (1 + std::abs(gap.by_evaluation)));
  }
}

TEST_CASE("state covariances") {
  const Mat A = scalar(0.5), B = scalar(1.0);
  const auto S = state_covariances(A, B, {scalar(0.0), scalar(0.0)}, 2.0);
  REQUIRE(S.size() == 3);
  CHECK(S[0](0, 0) == doctest::Approx(0.0));
  CHECK(S[1](0, 0) == doctest::Approx(4.0));
  CHECK(S[2](0, 0) == doctest::Approx(0.25 * 4.0 + 4.0));
}

TEST_CASE("indefinite input weight is a numerical error") {
  CHECK_THROWS_AS(riccati_backward(scalar(1), scalar(1), scalar(1), scalar(1), scalar(-5), 2),
                  NumericalError);
}
