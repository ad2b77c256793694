#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "actsel/bandit.hpp"
#include "actsel/errors.hpp"
#include "actsel/model.hpp"
#include "oracles.hpp"

using namespace actsel;

TEST_CASE("default rates") {
  const auto s = exp3s_init_arms(4, 1000);
  CHECK(s.gamma == doctest::Approx(std::sqrt(4 * std::log(4000.0) / ((std::exp(1.0) - 1) * 1000))));
  CHECK(s.alpha == doctest::Approx(1e-3));
  const auto p = s.probabilities();
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
  CHECK(exp3s_init_arms(10, 3).gamma == 1.0);
}

TEST_CASE("log-space update matches linear-space oracle") {
  BanditOptions opts;
  opts.yb_mode = YbMode::kFixed;
  opts.y_b = 5.0;
  auto s = exp3s_init_arms(5, 300, opts);
  oracle::Exp3S o(5, s.gamma, s.alpha);
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 7.0);
  for (int t = 0; t < 300; ++t) {
    const int a = exp3s_sample(s, rng);
    const double c = u(rng);
    const double r = exp3s_update(s, a, c);
    CHECK(r == doctest::Approx(1.0 - std::min(c, 5.0) / 5.0));
    o.update(a, r);
    const auto ps = s.probabilities(), po = o.probs();
    for (int i = 0; i < 5; ++i) CHECK(ps[i] == doctest::Approx(po[i]).epsilon(1e-9));
  }
}

TEST_CASE("adaptive normalizer tracks the largest cost") {
  auto s = exp3s_init_arms(3, 10);
  exp3s_update(s, 0, 4.0);
  CHECK(s.y_b == 4.0);
  exp3s_update(s, 1, 2.0);
  CHECK(s.y_b == 4.0);
  CHECK_THROWS_AS(exp3s_update(s, 0, NAN), NumericalError);
  CHECK_THROWS_AS(exp3s_update(s, 7, 1.0), ConfigError);
}

TEST_CASE("weights stay finite over long runs") {
  auto s = exp3s_init_arms(2, 200000);
  Rng rng(1);
  for (int t = 0; t < 200000; ++t) exp3s_update(s, 0, 0.0);
  for (double w : s.log_weights) CHECK(std::isfinite(w));
  CHECK(s.probabilities()[0] > 0.9);
}

TEST_CASE("subset rank is the lexicographic position") {
  for (int q = 1; q <= 7; ++q)
    for (int h = 1; h <= q; ++h) {
      const auto all = all_subsets(q, h);
      for (std::size_t i = 0; i < all.size(); ++i) CHECK(subset_index(all[i], q) == static_cast<int>(i));
    }
  const auto s = exp3s_init(5, 2, 100);
  CHECK(s.actions == 10);
  CHECK(s.subsets.size() == 10);
}

TEST_CASE("hardness and regret bound") {
  const std::vector<int> seq{0, 0, 1, 1, 0, 2, 2};
  CHECK(hardness(seq) == 4);
  CHECK(hardness(std::vector<int>{3}) == 1);
  const double l = std::log(2.0 * 2000);
  CHECK(exp3s_regret_bound(2, 2000, 3.0, 1) ==
        doctest::Approx(3.0 * std::sqrt(4000 * l) + 6.0 * std::exp(1.0) * std::sqrt(4000 / l)));
  CHECK_THROWS_AS(exp3s_regret_bound(1, 1, 1.0, 1), ConfigError);
}
