#include "actsel/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "actsel/errors.hpp"
#include "actsel/model.hpp"

namespace actsel {

namespace {

double log_sum_exp(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double log_add_exp(double a, double b) {
  const double mx = std::max(a, b);
  return mx + std::log(std::exp(a - mx) + std::exp(b - mx));
}

}  // namespace

std::vector<double> BanditState::probabilities() const {
  const double lse = log_sum_exp(log_weights);
  std::vector<double> p(actions);
  for (int i = 0; i < actions; ++i)
    p[i] = (1.0 - gamma) * std::exp(log_weights[i] - lse) + gamma / actions;
  return p;
}

BanditState exp3s_init_arms(int actions, long T, const BanditOptions& opts) {
  if (actions < 1) throw ConfigError("bandit needs at least one action");
  if (T < 1) throw ConfigError("bandit horizon T must be >= 1");
  if (!(opts.y_b > 0.0)) throw ConfigError("y_b must be > 0");
  BanditState s;
  s.actions = actions;
  s.horizon = T;
  const double KT = static_cast<double>(actions) * static_cast<double>(T);
  const double base = KT > 1.0 ? std::sqrt(actions * std::log(KT) / ((std::numbers::e - 1.0) * T)) : 1.0;
  s.gamma = opts.gamma.value_or(std::min(1.0, base));
  s.alpha = opts.alpha.value_or(1.0 / static_cast<double>(T));
  if (!(s.gamma > 0.0 && s.gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(s.alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  s.y_b = opts.y_b;
  s.yb_mode = opts.yb_mode;
  s.log_weights.assign(actions, 0.0);
  return s;
}

BanditState exp3s_init(int q, int H, long T, const BanditOptions& opts) {
  if (H < 1 || H > q) throw ConfigError("bandit needs 1 <= H <= q");
  const auto count = binomial(q, H, opts.action_cap);
  BanditState s = exp3s_init_arms(static_cast<int>(count), T, opts);
  s.subsets = all_subsets(q, H);
  return s;
}

int subset_index(const std::vector<int>& subset, int q) {
  // Rank = number of subsets that precede it lexicographically.
  const int h = static_cast<int>(subset.size());
  long rank = 0;
  int prev = -1;
  for (int i = 0; i < h; ++i) {
    for (int v = prev + 1; v < subset[i]; ++v)
      rank += static_cast<long>(binomial(q - v - 1, h - i - 1, UINT64_MAX));
    prev = subset[i];
  }
  return static_cast<int>(rank);
}

int exp3s_sample(const BanditState& state, Rng& rng) {
  const auto p = state.probabilities();
  std::discrete_distribution<int> dist(p.begin(), p.end());
  return dist(rng);
}

double exp3s_update(BanditState& state, int chosen, double cost) {
  if (!std::isfinite(cost)) throw NumericalError("bandit: non-finite cost");
  if (cost < 0.0) throw ConfigError("bandit: negative cost");
  if (chosen < 0 || chosen >= state.actions) throw ConfigError("bandit: action out of range");
  if (state.yb_mode == YbMode::kAdaptive) state.y_b = std::max(state.y_b, cost);
  const double reward = 1.0 - std::min(cost, state.y_b) / state.y_b;
  const double p = state.probabilities()[chosen];
  const double K = state.actions;

  const double log_total = log_sum_exp(state.log_weights);
  const double log_share =
      state.alpha > 0.0 ? std::log(std::numbers::e * state.alpha / K) + log_total : -INFINITY;
  for (int i = 0; i < state.actions; ++i) {
    const double xhat = i == chosen ? reward / p : 0.0;
    const double grown = state.log_weights[i] + state.gamma * xhat / K;
    state.log_weights[i] = std::isinf(log_share) ? grown : log_add_exp(grown, log_share);
  }
  const double mx = *std::max_element(state.log_weights.begin(), state.log_weights.end());
  for (double& w : state.log_weights) w -= mx;
  ++state.step;
  return reward;
}

int hardness(std::span<const int> sequence) {
  int h = 1;
  for (std::size_t i = 1; i < sequence.size(); ++i) h += sequence[i] != sequence[i - 1];
  return h;
}

double exp3s_regret_bound(long actions, long T, double y_b, int hardness) {
  const double KT = static_cast<double>(actions) * static_cast<double>(T);
  if (KT < 2.0) throw ConfigError("regret bound needs |Q| T >= 2");
  const double l = std::log(KT);
  return y_b * hardness * std::sqrt(KT * l) + 2.0 * y_b * std::numbers::e * std::sqrt(KT / l);
}

}  // namespace actsel
