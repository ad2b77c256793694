#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "actsel/bounds.hpp"
#include "actsel/linalg.hpp"
#include "oracles.hpp"

using namespace actsel;

namespace {

GeneratorParams verify_generator(std::uint64_t seed) {
  GeneratorParams g;
  g.n = 2;
  g.q = 4;
  g.H = 2;
  g.spectral_radius_target = 0.5;
  g.seed = seed;
  return g;
}

}  // namespace

TEST_CASE("transition products match explicit products") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<Mat> M(4, Mat(2, 2));
  for (auto& m : M)
    for (int i = 0; i < 4; ++i) m(i / 2, i % 2) = g(rng);
  const auto tab = transition_products(M);
  for (int k1 = 0; k1 <= 4; ++k1)
    for (int k2 = k1; k2 <= 4; ++k2) {
      Mat ref = Mat::Identity(2, 2);
      for (int k = k1; k < k2; ++k) ref = oracle::mul(M[k], ref);
      CHECK((tab[k1][k2 - k1] - ref).norm() < 1e-12);
    }
}

TEST_CASE("constants profile") {
  const auto inst = generate_random_instance(verify_generator(1000));
  const auto costs = CostSchedule::identity_family(inst.n, inst.m(), 1);
  const auto c = estimate_constants(inst, costs, 5);
  CHECK(c.subsets.size() == inst.candidate_subsets().size());
  CHECK(c.eta < 1.0);
  CHECK(c.zeta >= 1.0);
  CHECK(c.epsilon0 > 0.0);
  CHECK(c.beta(0.0) >= 1.0);
  CHECK(c.vartheta >= spectral_norm(inst.A));
}

TEST_CASE("deterministic bounds hold on a small campaign") {
  CampaignConfig cfg;
  cfg.instances = 2;
  cfg.generator = verify_generator(1000);
  cfg.verify.epsilons = {1e-8, 1e-6};
  cfg.verify.trials = 4;
  const auto res = run_bound_campaign(cfg);
  CHECK(res.report.violations() == 0);
  CHECK(res.report.checked("lemma1") > 0);
  CHECK(res.report.checked("prop2") > 0);
  for (double s : res.slopes) CHECK(s == doctest::Approx(2.0).epsilon(0.1));
  std::ostringstream os;
  write_bounds_csv(os, res.report);
  CHECK(os.str().rfind("lemma,subset,epsilon,k,lhs,rhs,hypothesis_ok,bound_ok\n", 0) == 0);
}

TEST_CASE("fault injection produces violations") {
  CampaignConfig cfg;
  cfg.instances = 1;
  cfg.generator = verify_generator(1000);
  cfg.verify.epsilons = {1e-6};
  cfg.verify.trials = 2;
  cfg.verify.rhs_scale = 1e-3;
  CHECK(run_bound_campaign(cfg).report.violations() > 0);
}

TEST_CASE("lse campaign") {
  const auto inst = generate_random_instance(verify_generator(1000));
  const auto res = run_lse_campaign(inst, 5, 5, 4, 10, 0.1, 1.0, 7, 2);
  CHECK(res.errors.size() == 10);
  CHECK(res.errors[0].size() == 4);
  CHECK(res.lemma7_frequency >= 0.0);
  CHECK(res.lemma7_frequency <= 1.0);
  CHECK(probabilistic_slack(0.1, 100) == doctest::Approx(0.1 + 3 * std::sqrt(0.09 / 100)));
}

TEST_CASE("report bookkeeping") {
  BoundReport r;
  r.add({"lemma1_K", "{1,2}", 1e-6, 0, 2.0, 1.0, true, false});
  r.add({"lemma1_K", "{1,2}", 1e-6, 0, 2.0, 1.0, false, false});
  r.add({"lemma7", "{1,2}", 0, 1, 2.0, 1.0, true, false});
  CHECK(r.violations() == 1);
  CHECK(r.violations(true) == 2);
  CHECK(r.checked("lemma1") == 1);
  CHECK(is_probabilistic("lemma9"));
  CHECK_FALSE(is_probabilistic("prop2"));
}
