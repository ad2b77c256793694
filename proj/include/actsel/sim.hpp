#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "actsel/linalg.hpp"
#include "actsel/model.hpp"

namespace actsel {

using Rng = std::mt19937_64;

/// Stream ids used with derive_seed. Distinct ids give independent streams
/// for the same (master, round).
enum class Stream : std::uint64_t { kDynamics = 1, kBandit = 2, kPerturbation = 3, kGenerator = 4 };

/// Counter-based seed for (master, round, stream): SplitMix64 applied to a
/// mix of the three words. Replays identically regardless of call order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t round, std::uint64_t stream);

inline Rng make_stream(std::uint64_t master, std::uint64_t round, Stream stream) {
  return Rng(derive_seed(master, round, static_cast<std::uint64_t>(stream)));
}

/// One episode of x_{k+1} = A x_k + B_S u_k + w_k from x_0 = 0.
struct EpisodeTrace {
  std::vector<Vec> states;             // N + 1
  std::vector<Vec> inputs;             // N, each m_S
  std::vector<Vec> process_noise;      // N
  std::vector<Vec> exploration_noise;  // N in exploration rollouts, else empty
  double realized_cost = 0.0;
  int round = 0;
  ActuatorSubset subset;

  int horizon() const { return static_cast<int>(inputs.size()); }
  bool is_exploration() const { return !exploration_noise.empty(); }
};

/// Closed loop u_k = K_k x_k with K_k taken from `gains` (horizon N = gains.size()).
EpisodeTrace rollout_gain_policy(const SystemInstance& inst, const ActuatorSubset& subset,
                                 const std::vector<Mat>& gains, const CostMatrices& cost,
                                 int round, Rng& rng);

/// u_k = K_{G_j} x_k + w~_k with w~_k ~ N(0, s^2 I) on group j, where
/// s = sqrt(2) sigma kappa unless `exploration_std` overrides it.
EpisodeTrace rollout_exploration(const SystemInstance& inst, int group, const CostMatrices& cost,
                                 int N, int round, Rng& rng,
                                 std::optional<double> exploration_std = std::nullopt);

/// sum_{k<N} (x'Qx + u'R_S u) + x_N'Q_f x_N with R_S taken on trace.subset.
double realized_cost(const EpisodeTrace& trace, const CostMatrices& cost);

/// Max over k of ||x_{k+1} - A x_k - B_S u_k - w_k||.
double dynamics_residual(const EpisodeTrace& trace, const SystemInstance& inst);

/// CSV with columns k, x1..xn, u1..um, w1..wn (plus wt1..wtm for exploration).
/// The final row (k = N) carries only the state.
void write_trace_csv(std::ostream& os, const EpisodeTrace& trace);

}  // namespace actsel
