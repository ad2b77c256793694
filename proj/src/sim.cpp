#include "actsel/sim.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "actsel/errors.hpp"

namespace actsel {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Vec gaussian(Rng& rng, Eigen::Index dim, double stddev) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = nd(rng);
  return stddev * v;
}

void append_double(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, ",%.17g", v);
  line += buf;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t round, std::uint64_t stream) {
  return splitmix64(splitmix64(splitmix64(master) ^ round) ^ (stream * 0xd1b54a32d192ed03ULL));
}

EpisodeTrace rollout_gain_policy(const SystemInstance& inst, const ActuatorSubset& subset,
                                 const std::vector<Mat>& gains, const CostMatrices& cost,
                                 int round, Rng& rng) {
  const Mat B_S = restrict_input(inst.B, subset);
  const int N = static_cast<int>(gains.size());
  if (N < 1) throw ConfigError("rollout_gain_policy: empty gain schedule");
  EpisodeTrace tr;
  tr.round = round;
  tr.subset = subset;
  tr.states.reserve(N + 1);
  tr.states.push_back(Vec::Zero(inst.n));
  for (int k = 0; k < N; ++k) {
    if (gains[k].rows() != B_S.cols() || gains[k].cols() != inst.n)
      throw ConfigError("rollout_gain_policy: gain " + std::to_string(k) + " is " +
                        std::to_string(gains[k].rows()) + "x" + std::to_string(gains[k].cols()) +
                        ", expected " + std::to_string(B_S.cols()) + "x" + std::to_string(inst.n));
    const Vec& x = tr.states.back();
    Vec u = gains[k] * x;
    Vec w = gaussian(rng, inst.n, inst.sigma);
    tr.states.push_back(inst.A * x + B_S * u + w);
    tr.inputs.push_back(std::move(u));
    tr.process_noise.push_back(std::move(w));
  }
  tr.realized_cost = realized_cost(tr, cost);
  return tr;
}

EpisodeTrace rollout_exploration(const SystemInstance& inst, int group, const CostMatrices& cost,
                                 int N, int round, Rng& rng, std::optional<double> exploration_std) {
  if (group < 0 || group >= inst.groups())
    throw ConfigError("rollout_exploration: group " + std::to_string(group) + " out of range");
  if (N < 1) throw ConfigError("rollout_exploration: N must be >= 1");
  const ActuatorSubset g = inst.group_subset(group);
  const Mat B_G = restrict_input(inst.B, g);
  const Mat& K = inst.stabilizing_gains.at(group);
  const double s = exploration_std.value_or(std::sqrt(2.0) * inst.sigma * inst.kappa);
  EpisodeTrace tr;
  tr.round = round;
  tr.subset = g;
  tr.states.push_back(Vec::Zero(inst.n));
  for (int k = 0; k < N; ++k) {
    const Vec& x = tr.states.back();
    Vec wt = gaussian(rng, B_G.cols(), s);
    Vec u = K * x + wt;
    Vec w = gaussian(rng, inst.n, inst.sigma);
    tr.states.push_back(inst.A * x + B_G * u + w);
    tr.inputs.push_back(std::move(u));
    tr.process_noise.push_back(std::move(w));
    tr.exploration_noise.push_back(std::move(wt));
  }
  tr.realized_cost = realized_cost(tr, cost);
  return tr;
}

double realized_cost(const EpisodeTrace& trace, const CostMatrices& cost) {
  const Mat R_S = restrict_cost(cost.R, trace.subset);
  double total = 0.0;
  for (int k = 0; k < trace.horizon(); ++k) {
    const Vec& x = trace.states[k];
    const Vec& u = trace.inputs[k];
    total += x.dot(cost.Q * x) + u.dot(R_S * u);
  }
  const Vec& xN = trace.states.back();
  return total + xN.dot(cost.Qf * xN);
}

double dynamics_residual(const EpisodeTrace& trace, const SystemInstance& inst) {
  const Mat B_S = restrict_input(inst.B, trace.subset);
  double worst = 0.0;
  for (int k = 0; k < trace.horizon(); ++k) {
    const Vec r = trace.states[k + 1] - inst.A * trace.states[k] - B_S * trace.inputs[k] -
                  trace.process_noise[k];
    worst = std::max(worst, r.norm());
  }
  return worst;
}

void write_trace_csv(std::ostream& os, const EpisodeTrace& trace) {
  const auto n = trace.states.front().size();
  const auto m = trace.horizon() ? trace.inputs.front().size() : 0;
  std::string header = "k";
  for (Eigen::Index i = 1; i <= n; ++i) header += ",x" + std::to_string(i);
  for (Eigen::Index i = 1; i <= m; ++i) header += ",u" + std::to_string(i);
  for (Eigen::Index i = 1; i <= n; ++i) header += ",w" + std::to_string(i);
  if (trace.is_exploration())
    for (Eigen::Index i = 1; i <= m; ++i) header += ",wt" + std::to_string(i);
  os << header << '\n';
  for (int k = 0; k <= trace.horizon(); ++k) {
    std::string line = std::to_string(k);
    for (Eigen::Index i = 0; i < n; ++i) append_double(line, trace.states[k](i));
    if (k < trace.horizon()) {
      for (Eigen::Index i = 0; i < m; ++i) append_double(line, trace.inputs[k](i));
      for (Eigen::Index i = 0; i < n; ++i) append_double(line, trace.process_noise[k](i));
      if (trace.is_exploration())
        for (Eigen::Index i = 0; i < m; ++i) append_double(line, trace.exploration_noise[k](i));
    }
    os << line << '\n';
  }
}

}  // namespace actsel
