#pragma once

#include <string>
#include <vector>

#include "actsel/linalg.hpp"
#include "actsel/model.hpp"
#include "actsel/sim.hpp"

namespace actsel {

/// Ridge fit for one partition group: theta = [A_hat B_hat_G], shape
/// n x (n + m_G), and its Gram matrix V = lambda I + sum z z'.
struct GroupFit {
  ActuatorSubset group;
  Mat theta;
  Mat V;
  long samples = 0;
};

struct Estimate {
  Mat A_hat;  // from group 0
  Mat B_hat;  // n x m, group blocks placed at their actuator columns
  std::vector<GroupFit> groups;
  double lambda = 1.0;
  int epoch = 0;
};

/// Running sums sum z z' and sum x_{k+1} z' per group. Adding traces epoch by
/// epoch and fitting at any point equals a batch fit on all traces so far.
class GramAccumulator {
 public:
  explicit GramAccumulator(const SystemInstance& shape);

  /// Adds every transition of an exploration trace for `group`.
  void add(int group, const EpisodeTrace& trace);

  /// Throws ConfigError on lambda <= 0 or a group with no samples;
  /// NumericalError if V fails to factor.
  Estimate fit(double lambda, int epoch) const;

  long samples(int group) const { return count_.at(group); }

 private:
  int n_;
  int m_;
  std::vector<ActuatorSubset> groups_;
  std::vector<Mat> zz_;
  std::vector<Mat> xz_;
  std::vector<long> count_;
};

/// Batch form: traces_by_group[j] holds every exploration trace of group j.
Estimate lse_fit(const SystemInstance& shape,
                 const std::vector<std::vector<EpisodeTrace>>& traces_by_group, double lambda,
                 int epoch = 1);

/// True Theta_G = [A B_G].
Mat true_theta(const SystemInstance& inst, int group);

struct GroupError {
  double spectral = 0.0;   // ||Delta||
  double frobenius = 0.0;  // ||Delta||_F
  double trace_form = 0.0; // Tr(Delta V Delta')
};

std::vector<GroupError> estimation_error(const Estimate& est, const SystemInstance& inst);

/// 4 sigma^2 n log(n det V / (delta det(lambda I))) + 2 lambda ||Theta||_F^2.
double self_normalized_bound(const Mat& V, double lambda, double sigma, int n, double delta,
                             const Mat& theta);

std::string serialize_estimate(const Estimate& est);
Estimate parse_estimate(const std::string& text);

}  // namespace actsel
