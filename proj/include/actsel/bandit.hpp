#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "actsel/sim.hpp"

namespace actsel {

enum class YbMode { kFixed, kAdaptive };

struct BanditOptions {
  YbMode yb_mode = YbMode::kAdaptive;
  double y_b = 1.0;                     // initial / fixed normalizer
  std::optional<double> gamma;          // overrides the default exploration rate
  std::optional<double> alpha;          // overrides 1/T
  std::uint64_t action_cap = 1'000'000;
};

/// Exp3.S state. Weights live in log-space and are renormalized so the
/// largest log-weight is 0 after every update.
struct BanditState {
  int actions = 0;
  long horizon = 0;
  double gamma = 1.0;
  double alpha = 0.0;
  double y_b = 1.0;
  YbMode yb_mode = YbMode::kAdaptive;
  long step = 0;
  std::vector<double> log_weights;
  std::vector<std::vector<int>> subsets;  // index -> actuator indices; empty for bare arms

  std::vector<double> probabilities() const;
};

/// Bandit over `actions` unlabeled arms.
BanditState exp3s_init_arms(int actions, long T, const BanditOptions& opts = {});

/// Bandit over the C(q, H) subsets in lexicographic order.
BanditState exp3s_init(int q, int H, long T, const BanditOptions& opts = {});

/// Lexicographic rank of a sorted size-H subset of {0..q-1}.
int subset_index(const std::vector<int>& subset, int q);

int exp3s_sample(const BanditState& state, Rng& rng);

/// Feeds back a nonnegative cost for the chosen arm; returns the reward used.
double exp3s_update(BanditState& state, int chosen, double cost);

/// 1 + number of switches.
int hardness(std::span<const int> sequence);

/// y_b h sqrt(K T ln(K T)) + 2 y_b e sqrt(K T / ln(K T)).
double exp3s_regret_bound(long actions, long T, double y_b, int hardness);

}  // namespace actsel
