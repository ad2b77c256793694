#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "actsel/errors.hpp"
#include "actsel/linalg.hpp"
#include "actsel/lqr.hpp"
#include "actsel/sim.hpp"
#include "actsel/sysid.hpp"
#include "oracles.hpp"

using namespace actsel;

namespace {

SystemInstance small_instance(std::uint64_t seed = 1) {
  GeneratorParams g;
  g.n = 3;
  g.q = 4;
  g.H = 2;
  g.seed = seed;
  return generate_random_instance(g);
}

}  // namespace

TEST_CASE("seed derivation separates streams and rounds") {
  CHECK(derive_seed(1, 0, 1) != derive_seed(1, 0, 2));
  CHECK(derive_seed(1, 0, 1) != derive_seed(1, 1, 1));
  CHECK(derive_seed(1, 0, 1) != derive_seed(2, 0, 1));
  CHECK(derive_seed(5, 6, 7) == derive_seed(5, 6, 7));
}

TEST_CASE("rollouts obey the dynamics and are reproducible") {
  const auto inst = small_instance();
  const auto cost = CostSchedule::identity_family(inst.n, inst.m(), 1).at(0);
  const auto s = inst.candidate_subsets().front();
  const auto sched = riccati_backward(inst.A, restrict_input(inst.B, s), cost.Q, cost.Qf,
                                      restrict_cost(cost.R, s), 6);
  Rng a = make_stream(9, 3, Stream::kDynamics), b = make_stream(9, 3, Stream::kDynamics);
  const auto ta = rollout_gain_policy(inst, s, sched.gains, cost, 3, a);
  const auto tb = rollout_gain_policy(inst, s, sched.gains, cost, 3, b);
  CHECK(ta.horizon() == 6);
  CHECK(ta.states.size() == 7);
  CHECK(ta.states[0].norm() == 0.0);
  CHECK(dynamics_residual(ta, inst) < 1e-12);
  CHECK(ta.realized_cost == tb.realized_cost);
  CHECK(realized_cost(ta, cost) == doctest::Approx(ta.realized_cost).epsilon(1e-12));

  // Independent recomputation of the realized cost.
  double c = 0.0;
  const Mat R = restrict_cost(cost.R, s);
  for (int k = 0; k < ta.horizon(); ++k)
    c += ta.states[k].dot(cost.Q * ta.states[k]) + ta.inputs[k].dot(R * ta.inputs[k]);
  c += ta.states.back().dot(cost.Qf * ta.states.back());
  CHECK(c == doctest::Approx(ta.realized_cost).epsilon(1e-12));

  Rng e = make_stream(9, 4, Stream::kDynamics);
  const auto te = rollout_exploration(inst, 0, cost, 5, 4, e);
  CHECK(te.is_exploration());
  CHECK(dynamics_residual(te, inst) < 1e-12);
}

TEST_CASE("trace CSV") {
  const auto inst = small_instance();
  const auto cost = CostSchedule::identity_family(inst.n, inst.m(), 1).at(0);
  Rng r(1);
  const auto t = rollout_exploration(inst, 1, cost, 3, 0, r);
  std::ostringstream os;
  write_trace_csv(os, t);
  CHECK(os.str().rfind("k,", 0) == 0);
}

TEST_CASE("LSE matches the ridge oracle") {
  const auto inst = small_instance(2);
  const auto cost = CostSchedule::identity_family(inst.n, inst.m(), 1).at(0);
  std::vector<std::vector<EpisodeTrace>> traces(inst.groups());
  for (int j = 0; j < inst.groups(); ++j)
    for (int r = 0; r < 6; ++r) {
      Rng rng = make_stream(3, static_cast<std::uint64_t>(j * 100 + r), Stream::kDynamics);
      traces[j].push_back(rollout_exploration(inst, j, cost, 5, r, rng));
    }
  const auto est = lse_fit(inst, traces, 0.7);
  REQUIRE(static_cast<int>(est.groups.size()) == inst.groups());
  for (int j = 0; j < inst.groups(); ++j) {
    std::vector<Eigen::VectorXd> z, y;
    for (const auto& tr : traces[j])
      for (int k = 0; k < tr.horizon(); ++k) {
        Eigen::VectorXd zk(inst.n + tr.inputs[k].size());
        zk << tr.states[k], tr.inputs[k];
        z.push_back(zk);
        y.push_back(tr.states[k + 1]);
      }
    const Mat ref = oracle::ridge(z, y, 0.7);
    CHECK((est.groups[j].theta - ref).norm() < 1e-9 * (1 + ref.norm()));
    CHECK(est.groups[j].samples == 30);
  }
  CHECK((est.A_hat - est.groups[0].theta.leftCols(inst.n)).norm() == 0.0);

  GramAccumulator acc(inst);
  for (int j = 0; j < inst.groups(); ++j)
    for (const auto& tr : traces[j]) acc.add(j, tr);
  const auto inc = acc.fit(0.7, 1);
  for (int j = 0; j < inst.groups(); ++j)
    CHECK((inc.groups[j].theta - est.groups[j].theta).norm() < 1e-12);
  CHECK_THROWS_AS(acc.add(0, traces[1][0]), ConfigError);
}

TEST_CASE("estimation error shrinks with data") {
  const auto inst = small_instance(4);
  const auto cost = CostSchedule::identity_family(inst.n, inst.m(), 1).at(0);
  GramAccumulator acc(inst);
  double prev = INFINITY;
  int rounds = 0;
  for (int target : {10, 100, 1000}) {
    for (; rounds < target; ++rounds)
      for (int j = 0; j < inst.groups(); ++j) {
        Rng rng = make_stream(8, static_cast<std::uint64_t>(rounds * 16 + j), Stream::kDynamics);
        acc.add(j, rollout_exploration(inst, j, cost, 5, rounds, rng));
      }
    const auto err = estimation_error(acc.fit(1.0, 1), inst);
    double worst = 0.0;
    for (const auto& e : err) worst = std::max(worst, e.spectral);
    CHECK(worst < prev);
    prev = worst;
  }
  CHECK(prev < 0.1);
}

TEST_CASE("true parameters give zero error and the bound is positive") {
  const auto inst = small_instance();
  const Mat theta = true_theta(inst, 0);
  CHECK(theta.cols() == inst.n + inst.group_subset(0).input_dim());
  const Mat V = 3.0 * Mat::Identity(theta.cols(), theta.cols());
  CHECK(self_normalized_bound(V, 1.0, inst.sigma, inst.n, 0.1, theta) > 0.0);
}

TEST_CASE("estimate round trip") {
  const auto inst = small_instance();
  const auto cost = CostSchedule::identity_family(inst.n, inst.m(), 1).at(0);
  GramAccumulator acc(inst);
  for (int j = 0; j < inst.groups(); ++j) {
    Rng rng(j + 1);
    acc.add(j, rollout_exploration(inst, j, cost, 5, 0, rng));
  }
  const auto est = acc.fit(1.0, 2);
  const auto back = parse_estimate(serialize_estimate(est));
  CHECK(back.epoch == 2);
  CHECK((back.B_hat - est.B_hat).norm() == 0.0);
  CHECK((back.groups[1].V - est.groups[1].V).norm() == 0.0);
}
