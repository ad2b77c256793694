#include "actsel/sysid.hpp"

#include <cmath>

#include "actsel/errors.hpp"
#include "json_io.hpp"

namespace actsel {

GramAccumulator::GramAccumulator(const SystemInstance& shape) : n_(shape.n), m_(shape.m()) {
  for (int j = 0; j < shape.groups(); ++j) {
    groups_.push_back(shape.group_subset(j));
    const int d = n_ + groups_.back().input_dim();
    zz_.push_back(Mat::Zero(d, d));
    xz_.push_back(Mat::Zero(n_, d));
    count_.push_back(0);
  }
}

void GramAccumulator::add(int group, const EpisodeTrace& trace) {
  if (group < 0 || group >= static_cast<int>(groups_.size()))
    throw ConfigError("sysid: group " + std::to_string(group) + " out of range");
  if (!(trace.subset == groups_[group]))
    throw ConfigError("sysid: trace subset " + trace.subset.label() + " does not match group " +
                      groups_[group].label());
  const int d = n_ + groups_[group].input_dim();
  Vec z(d);
  for (int k = 0; k < trace.horizon(); ++k) {
    z << trace.states[k], trace.inputs[k];
    zz_[group].noalias() += z * z.transpose();
    xz_[group].noalias() += trace.states[k + 1] * z.transpose();
    ++count_[group];
  }
}

Estimate GramAccumulator::fit(double lambda, int epoch) const {
  if (!(lambda > 0.0)) throw ConfigError("sysid: lambda must be > 0");
  Estimate est;
  est.lambda = lambda;
  est.epoch = epoch;
  est.B_hat = Mat::Zero(n_, m_);
  for (std::size_t j = 0; j < groups_.size(); ++j) {
    if (count_[j] == 0)
      throw ConfigError("sysid: no exploration data for group " + groups_[j].label());
    GroupFit g;
    g.group = groups_[j];
    g.samples = count_[j];
    const auto d = zz_[j].rows();
    g.V = symmetrize(zz_[j] + lambda * Mat::Identity(d, d));
    Eigen::LLT<Mat> llt(g.V);
    if (llt.info() != Eigen::Success)
      throw NumericalError("sysid: Gram matrix of group " + groups_[j].label() + " not PD");
    g.theta = llt.solve(xz_[j].transpose()).transpose();
    for (int c = 0; c < g.group.input_dim(); ++c)
      est.B_hat.col(g.group.columns[c]) = g.theta.col(n_ + c);
    est.groups.push_back(std::move(g));
  }
  est.A_hat = est.groups.front().theta.leftCols(n_);
  return est;
}

Estimate lse_fit(const SystemInstance& shape,
                 const std::vector<std::vector<EpisodeTrace>>& traces_by_group, double lambda,
                 int epoch) {
  if (static_cast<int>(traces_by_group.size()) != shape.groups())
    throw ConfigError("lse_fit: expected traces for " + std::to_string(shape.groups()) + " groups");
  GramAccumulator acc(shape);
  for (int j = 0; j < shape.groups(); ++j)
    for (const auto& tr : traces_by_group[j]) acc.add(j, tr);
  return acc.fit(lambda, epoch);
}

Mat true_theta(const SystemInstance& inst, int group) {
  const Mat B_G = restrict_input(inst.B, inst.group_subset(group));
  Mat theta(inst.n, inst.n + B_G.cols());
  theta << inst.A, B_G;
  return theta;
}

std::vector<GroupError> estimation_error(const Estimate& est, const SystemInstance& inst) {
  std::vector<GroupError> out;
  for (std::size_t j = 0; j < est.groups.size(); ++j) {
    const Mat delta = est.groups[j].theta - true_theta(inst, static_cast<int>(j));
    out.push_back({spectral_norm(delta), delta.norm(),
                   (delta * est.groups[j].V * delta.transpose()).trace()});
  }
  return out;
}

double self_normalized_bound(const Mat& V, double lambda, double sigma, int n, double delta,
                             const Mat& theta) {
  Eigen::LLT<Mat> llt(V);
  if (llt.info() != Eigen::Success) throw NumericalError("self_normalized_bound: V not PD");
  const Vec diag = Mat(llt.matrixL()).diagonal();
  const double logdet_v = 2.0 * diag.array().log().sum();
  const double logdet_l = static_cast<double>(V.rows()) * std::log(lambda);
  const double log_term = std::log(static_cast<double>(n) / delta) + logdet_v - logdet_l;
  return 4.0 * sigma * sigma * n * log_term + 2.0 * lambda * theta.squaredNorm();
}

std::string serialize_estimate(const Estimate& est) {
  using nlohmann::json;
  json j;
  j["format"] = "actsel-estimate";
  j["version"] = 1;
  j["lambda"] = est.lambda;
  j["epoch"] = est.epoch;
  j["A_hat"] = detail::matrix_to_json(est.A_hat);
  j["B_hat"] = detail::matrix_to_json(est.B_hat);
  auto groups = json::array();
  for (const auto& g : est.groups)
    groups.push_back({{"indices", g.group.indices},
                      {"columns", g.group.columns},
                      {"samples", g.samples},
                      {"theta", detail::matrix_to_json(g.theta)},
                      {"V", detail::matrix_to_json(g.V)}});
  j["groups"] = std::move(groups);
  return j.dump(2) + "\n";
}

Estimate parse_estimate(const std::string& text) {
  using nlohmann::json;
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "actsel-estimate") throw ConfigError("not an actsel estimate");
    Estimate est;
    est.lambda = j.at("lambda").get<double>();
    est.epoch = j.at("epoch").get<int>();
    est.A_hat = detail::matrix_from_json(j.at("A_hat"));
    est.B_hat = detail::matrix_from_json(j.at("B_hat"));
    for (const auto& g : j.at("groups")) {
      GroupFit f;
      f.group.indices = g.at("indices").get<std::vector<int>>();
      f.group.columns = g.at("columns").get<std::vector<int>>();
      f.samples = g.at("samples").get<long>();
      f.theta = detail::matrix_from_json(g.at("theta"));
      f.V = detail::matrix_from_json(g.at("V"));
      est.groups.push_back(std::move(f));
    }
    return est;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed estimate: ") + e.what());
  }
}

}  // namespace actsel
