#include "actsel/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "actsel/errors.hpp"
#include "parallel.hpp"

namespace actsel {

namespace {

double scale_rhs(double rhs, double scale) { return rhs * scale; }

BoundRow make_row(std::string lemma, const ActuatorSubset& s, double eps, int k, double lhs,
                  double rhs, bool hyp) {
  return {std::move(lemma), s.label(), eps, k, lhs, rhs, hyp, lhs <= rhs};
}

Mat random_direction(Eigen::Index rows, Eigen::Index cols, double norm, Rng& rng) {
  std::normal_distribution<double> nd;
  Mat E(rows, cols);
  for (Eigen::Index i = 0; i < E.size(); ++i) E.data()[i] = nd(rng);
  const double s = spectral_norm(E);
  return s > 0.0 ? Mat(E * (norm / s)) : Mat::Zero(rows, cols);
}

Mat rank_one_direction(const Mat& G, double norm) {
  if (G.size() == 0 || G.norm() == 0.0) return Mat::Zero(G.rows(), G.cols());
  Eigen::JacobiSVD<Mat> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return norm * svd.matrixU().col(0) * svd.matrixV().col(0).transpose();
}

std::vector<Mat> closed_loops(const Mat& A, const Mat& B_S, const std::vector<Mat>& gains) {
  std::vector<Mat> out;
  out.reserve(gains.size());
  for (const auto& K : gains) out.push_back(A + B_S * K);
  return out;
}

struct TruePair {
  const CostMatrices* cost;
  Mat R_S;
  GainSchedule sched;
};

std::vector<TruePair> true_schedules(const SystemInstance& inst, const CostSchedule& costs,
                                     const ActuatorSubset& s, int N) {
  const Mat B_S = restrict_input(inst.B, s);
  std::vector<TruePair> out;
  for (const auto& c : costs.entries()) {
    Mat R_S = restrict_cost(c.R, s);
    auto sched = riccati_backward(inst.A, B_S, c.Q, c.Qf, R_S, N);
    out.push_back({&c, std::move(R_S), std::move(sched)});
  }
  return out;
}

}  // namespace

// --- constants ------------------------------------------------------------

double ConstantsProfile::beta(double eps) const { return std::max(1.0, eps + norm_A); }

double ConstantsProfile::mu(const SubsetConstants& s, double eps) const {
  return 32.0 * std::pow(ell, 2.5) * std::pow(beta(eps), 2.0 * (ell - 1)) * (1.0 + 1.0 / nu) *
         std::pow(s.Gamma_tilde, 3) * std::max(sigma_Q, sigma_R);
}

double ConstantsProfile::value_error_rate(const SubsetConstants& s, double eps) const {
  return std::pow(20.0 * std::pow(s.Gamma_tilde, 9) * sigma_R, ell - 1) * mu(s, eps);
}

double ConstantsProfile::cost_gap_threshold(const SubsetConstants& s, double eps) const {
  return (1.0 - s.eta) / (6.0 * s.B_norm * s.zeta) / std::pow(s.Gamma_tilde, 3) /
         value_error_rate(s, eps);
}

double ConstantsProfile::cost_gap_coefficient(const SubsetConstants& s, double eps) const {
  const double k_rate = 3.0 * std::pow(s.Gamma_tilde, 3) * value_error_rate(s, eps);
  const double m_S = s.subset.input_dim();
  return 4.0 * std::min<double>(n, m_S) * N * s.zeta * s.zeta / (1.0 - s.eta * s.eta) * sigma *
         sigma * (sigma_R + std::pow(s.Gamma, 3)) * k_rate * k_rate;
}

const SubsetConstants& ConstantsProfile::at(const ActuatorSubset& s) const {
  for (const auto& sc : subsets)
    if (sc.subset == s) return sc;
  throw ConfigError("no constants for subset " + s.label());
}

std::vector<std::vector<Mat>> transition_products(const std::vector<Mat>& M) {
  const int N = static_cast<int>(M.size());
  const auto n = N ? M.front().rows() : 0;
  std::vector<std::vector<Mat>> out(N + 1);
  for (int k1 = 0; k1 <= N; ++k1) {
    Mat prod = Mat::Identity(n, n);
    out[k1].push_back(prod);
    for (int k2 = k1 + 1; k2 <= N; ++k2) {
      prod = M[k2 - 1] * prod;
      out[k1].push_back(prod);
    }
  }
  return out;
}

std::pair<double, double> fit_transition_decay(
    const std::vector<std::vector<std::vector<Mat>>>& tables) {
  double eta = 0.0;
  for (const auto& tab : tables) {
    const int N = static_cast<int>(tab.size()) - 1;
    const int min_gap = std::max(1, (N + 1) / 2);
    for (int k1 = 0; k1 <= N; ++k1)
      for (int d = min_gap; k1 + d <= N; ++d)
        eta = std::max(eta, std::pow(spectral_norm(tab[k1][d]), 1.0 / d));
  }
  eta = std::max(1e-3, eta * (1.0 + 1e-6));
  if (!(eta < 1.0))
    throw NumericalError("transition products are not contracting (eta = " +
                         std::to_string(eta) + ")");
  double zeta = 1.0;
  for (const auto& tab : tables)
    for (const auto& row : tab)
      for (std::size_t d = 0; d < row.size(); ++d)
        zeta = std::max(zeta, spectral_norm(row[d]) / std::pow(eta, static_cast<double>(d)));
  return {zeta * (1.0 + 1e-9), eta};
}

ConstantsProfile estimate_constants(const SystemInstance& inst, const CostSchedule& costs, int N) {
  ConstantsProfile c;
  c.n = inst.n;
  c.N = N;
  c.ell = inst.ell;
  c.nu = inst.nu;
  c.sigma = inst.sigma;
  c.sigma_Q = costs.sigma_Q();
  c.sigma_R = costs.sigma_R();
  c.norm_A = spectral_norm(inst.A);
  c.vartheta = std::max(c.norm_A, spectral_norm(inst.B));
  c.zeta0 = inst.zeta0;
  c.eta0 = inst.eta0;
  c.zeta = 1.0;
  c.eta = 0.0;
  c.epsilon0 = INFINITY;
  for (const auto& s : inst.candidate_subsets()) {
    SubsetConstants sc;
    sc.subset = s;
    const Mat B_S = restrict_input(inst.B, s);
    sc.B_norm = spectral_norm(B_S);
    sc.Gamma = c.vartheta;
    std::vector<std::vector<std::vector<Mat>>> tables;
    for (const auto& tp : true_schedules(inst, costs, s, N)) {
      for (int k = 1; k <= N; ++k)
        sc.Gamma = std::max({sc.Gamma, spectral_norm(tp.sched.values[k]),
                             spectral_norm(tp.sched.gains[k - 1])});
      tables.push_back(transition_products(closed_loops(inst.A, B_S, tp.sched.gains)));
    }
    sc.Gamma_tilde = 1.0 + sc.Gamma;
    std::tie(sc.zeta, sc.eta) = fit_transition_decay(tables);
    // The threshold shrinks as eps grows (through beta), so f(f(0)) satisfies
    // eps <= f(eps).
    sc.epsilon0_term = c.cost_gap_threshold(sc, c.cost_gap_threshold(sc, 0.0));
    c.zeta = std::max(c.zeta, sc.zeta);
    c.eta = std::max(c.eta, sc.eta);
    c.epsilon0 = std::min(c.epsilon0, sc.epsilon0_term);
    c.kappa_hat = std::max(c.kappa_hat, sc.Gamma + (1.0 - sc.eta) / (2.0 * sc.B_norm * sc.zeta));
    c.subsets.push_back(std::move(sc));
  }
  return c;
}

double cost_ceiling(const ConstantsProfile& c, long T, double delta) {
  return c.N * (c.sigma_Q + c.kappa_hat * c.kappa_hat * c.sigma_R) * 4.0 * c.zeta * c.zeta *
         c.sigma * c.sigma / ((1.0 - c.eta) * (1.0 - c.eta)) * 5.0 * c.n *
         std::log(8.0 * c.N * static_cast<double>(T) / delta);
}

// --- reports --------------------------------------------------------------

void BoundReport::add(BoundRow row) { rows.push_back(std::move(row)); }

void BoundReport::append(const BoundReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

bool is_probabilistic(const std::string& lemma) { return lemma == "lemma7" || lemma == "lemma9"; }

long BoundReport::violations(bool include_probabilistic) const {
  long v = 0;
  for (const auto& r : rows)
    if (r.hypothesis_ok && !r.bound_ok && (include_probabilistic || !is_probabilistic(r.lemma))) ++v;
  return v;
}

long BoundReport::checked(const std::string& prefix) const {
  long v = 0;
  for (const auto& r : rows)
    if (r.hypothesis_ok && r.lemma.rfind(prefix, 0) == 0) ++v;
  return v;
}

void write_bounds_csv(std::ostream& os, const BoundReport& report) {
  os << "lemma,subset,epsilon,k,lhs,rhs,hypothesis_ok,bound_ok\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,\"%s\",%.17g,%d,%.17g,%.17g,%d,%d\n", r.lemma.c_str(),
                  r.subset.c_str(), r.epsilon, r.k, r.lhs, r.rhs, r.hypothesis_ok ? 1 : 0,
                  r.bound_ok ? 1 : 0);
    os << buf;
  }
}

// --- verifiers ------------------------------------------------------------

Perturbation make_perturbation(const Mat& A, const Mat& B_S, const CostMatrices& cost, int N,
                               double eps, int trial, Rng& rng) {
  if (trial % 2 == 0) {
    Perturbation p;
    p.E_A = random_direction(A.rows(), A.cols(), eps, rng);
    p.E_B = random_direction(B_S.rows(), B_S.cols(), eps, rng);
    return p;
  }
  const double h = 1e-6;
  auto trace_p0 = [&](const Mat& Ah, const Mat& Bh, const Mat& Rs) {
    return riccati_backward(Ah, Bh, cost.Q, cost.Qf, Rs, N).values[0].trace();
  };
  const Mat& Rs = cost.R;
  Mat GA(A.rows(), A.cols()), GB(B_S.rows(), B_S.cols());
  for (Eigen::Index i = 0; i < A.size(); ++i) {
    Mat Ap = A, Am = A;
    Ap.data()[i] += h;
    Am.data()[i] -= h;
    GA.data()[i] = (trace_p0(Ap, B_S, Rs) - trace_p0(Am, B_S, Rs)) / (2 * h);
  }
  for (Eigen::Index i = 0; i < B_S.size(); ++i) {
    Mat Bp = B_S, Bm = B_S;
    Bp.data()[i] += h;
    Bm.data()[i] -= h;
    GB.data()[i] = (trace_p0(A, Bp, Rs) - trace_p0(A, Bm, Rs)) / (2 * h);
  }
  const double sign = (trial / 2) % 2 == 0 ? 1.0 : -1.0;
  return {sign * rank_one_direction(GA, eps), sign * rank_one_direction(GB, eps)};
}

namespace {

/// Cost matrices with R already restricted to the subset, as make_perturbation expects.
CostMatrices restricted(const CostMatrices& c, const ActuatorSubset& s) {
  return {c.Q, c.Qf, restrict_cost(c.R, s)};
}

template <class Fn>
void for_each_draw(const SystemInstance& inst, const CostSchedule& costs, const ActuatorSubset& s,
                   const VerifyOptions& opts, std::uint64_t stream_tag, int N, Fn&& fn) {
  const Mat B_S = restrict_input(inst.B, s);
  for (std::size_t e = 0; e < costs.entries().size(); ++e) {
    const CostMatrices rc = restricted(costs.entries()[e], s);
    for (double eps : opts.epsilons) {
      for (int trial = 0; trial < opts.trials; ++trial) {
        Rng rng(derive_seed(opts.seed, stream_tag * 1'000'003 + e * 7919 + trial,
                            static_cast<std::uint64_t>(Stream::kPerturbation) +
                                static_cast<std::uint64_t>(eps * 1e12)));
        const auto p = make_perturbation(inst.A, B_S, rc, N, eps, trial, rng);
        fn(rc, eps, p, rng);
      }
    }
  }
}

std::uint64_t subset_tag(const ActuatorSubset& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (int i : s.indices) h = (h ^ static_cast<std::uint64_t>(i + 1)) * 1099511628211ULL;
  return h % 1'000'000;
}

}  // namespace

BoundReport verify_gain_value_perturbation(const SystemInstance& inst, const CostSchedule& costs,
                                           const ConstantsProfile& c, const ActuatorSubset& s,
                                           const VerifyOptions& opts) {
  BoundReport rep;
  const SubsetConstants& sc = c.at(s);
  const Mat B_S = restrict_input(inst.B, s);
  const int N = c.N;
  const double Gt3 = std::pow(sc.Gamma_tilde, 3);
  const double step_P = 20.0 * std::pow(sc.Gamma_tilde, 9) * c.sigma_R;
  for_each_draw(inst, costs, s, opts, subset_tag(s) * 3 + 1, N,
                [&](const CostMatrices& rc, double eps, const Perturbation& p, Rng&) {
    const auto tru = riccati_backward(inst.A, B_S, rc.Q, rc.Qf, rc.R, N);
    GainSchedule est;
    try {
      est = riccati_backward(inst.A + p.E_A, B_S + p.E_B, rc.Q, rc.Qf, rc.R, N);
    } catch (const NumericalError&) {
      // Only reachable far outside every hypothesis; record as vacuous.
      rep.add(make_row("prop1_P", s, eps, 0, INFINITY, 0.0, false));
      return;
    }
    std::vector<double> dP(N + 1), dK(N);
    for (int k = 0; k <= N; ++k) dP[k] = spectral_norm(tru.values[k] - est.values[k]);
    for (int k = 0; k < N; ++k) dK[k] = spectral_norm(tru.gains[k] - est.gains[k]);

    for (int k = N; k >= 1; --k) {
      const double D = eps > 0.0 ? std::max(1.0, dP[k] / eps) : 1.0;
      const bool hyp = D * eps <= 1.0 / 6.0;
      rep.add(make_row("lemma1_K", s, eps, k - 1, dK[k - 1],
                       scale_rhs(3.0 * Gt3 * D * eps, opts.rhs_scale), hyp));
      rep.add(make_row("lemma1_P", s, eps, k - 1, dP[k - 1],
                       scale_rhs(step_P * D * eps, opts.rhs_scale), hyp));
    }
    const double mu_common = 32.0 * std::pow(c.ell, 2.5) * std::pow(c.beta(eps), 2.0 * (c.ell - 1)) *
                             (1.0 + 1.0 / c.nu) * std::pow(1.0 + sc.B_norm, 2) *
                             std::max(c.sigma_Q, c.sigma_R);
    for (int k = N; k >= 0; k -= c.ell) {
      const double mu_k = mu_common * spectral_norm(tru.values[k]);
      rep.add(make_row("lemma3_P", s, eps, k, dP[k], scale_rhs(mu_k * eps, opts.rhs_scale),
                       mu_k * eps <= 1.0));
    }
    const double rate = c.value_error_rate(sc, eps) * eps;
    const bool hyp = rate <= 1.0 / 6.0;
    for (int k = 0; k <= N; ++k)
      rep.add(make_row("prop1_P", s, eps, k, dP[k], scale_rhs(rate, opts.rhs_scale), hyp));
    for (int k = 0; k < N; ++k)
      rep.add(make_row("prop1_K", s, eps, k, dK[k], scale_rhs(3.0 * Gt3 * rate, opts.rhs_scale), hyp));
  });
  return rep;
}

BoundReport verify_controllability_perturbation(const SystemInstance& inst,
                                                const ConstantsProfile& c, const ActuatorSubset& s,
                                                const VerifyOptions& opts) {
  BoundReport rep;
  const Mat B_S = restrict_input(inst.B, s);
  const double bn = spectral_norm(B_S);
  const CostMatrices dummy{Mat::Identity(inst.n, inst.n), Mat::Identity(inst.n, inst.n),
                           Mat::Identity(B_S.cols(), B_S.cols())};
  for (double eps : opts.epsilons) {
    for (int trial = 0; trial < opts.trials; ++trial) {
      Rng rng(derive_seed(opts.seed, subset_tag(s) * 3 + 2, trial * 131 + static_cast<std::uint64_t>(eps * 1e12)));
      const auto p = make_perturbation(inst.A, B_S, dummy, c.N, eps, trial, rng);
      const double sn = controllability_margin(inst.A + p.E_A, B_S + p.E_B, c.ell);
      const double lower = c.nu - eps * std::pow(c.ell, 1.5) *
                                      std::pow(c.beta(eps), c.ell - 1) * (bn + 1.0);
      // lhs <= rhs reads "bound <= sigma_n"; fault injection raises the bound.
      const double lhs = opts.rhs_scale < 1.0 ? lower / opts.rhs_scale : lower;
      rep.add(make_row("lemma2", s, eps, c.ell, lhs, sn, true));
    }
  }
  return rep;
}

BoundReport verify_cost_gap_bound(const SystemInstance& inst, const CostSchedule& costs,
                                  const ConstantsProfile& c, const ActuatorSubset& s,
                                  const VerifyOptions& opts) {
  BoundReport rep;
  const SubsetConstants& sc = c.at(s);
  const Mat B_S = restrict_input(inst.B, s);
  for_each_draw(inst, costs, s, opts, subset_tag(s) * 3 + 3, c.N,
                [&](const CostMatrices& rc, double eps, const Perturbation& p, Rng&) {
    const bool hyp = eps <= c.cost_gap_threshold(sc, eps);
    const double rhs = scale_rhs(c.cost_gap_coefficient(sc, eps) * eps * eps, opts.rhs_scale);
    const auto tru = riccati_backward(inst.A, B_S, rc.Q, rc.Qf, rc.R, c.N);
    double gap = INFINITY;
    try {
      const auto ce = riccati_backward(inst.A + p.E_A, B_S + p.E_B, rc.Q, rc.Qf, rc.R, c.N);
      gap = cost_gap_both(inst.A, B_S, tru, ce, rc.Q, rc.R, inst.sigma).by_gain_error;
    } catch (const NumericalError&) {
      if (hyp) throw;
    }
    rep.add(make_row("prop2", s, eps, 0, gap, rhs, hyp));
  });
  return rep;
}

double cost_gap_slope(const SystemInstance& inst, const CostMatrices& cost, int N,
                      const ActuatorSubset& s, const std::vector<double>& epsilons, int directions,
                      std::uint64_t seed) {
  if (epsilons.size() < 2) throw ConfigError("slope needs at least two epsilon values");
  const Mat B_S = restrict_input(inst.B, s);
  const CostMatrices rc = restricted(cost, s);
  const auto tru = riccati_backward(inst.A, B_S, rc.Q, rc.Qf, rc.R, N);
  double total = 0.0;
  for (int d = 0; d < directions; ++d) {
    Rng rng(derive_seed(seed, subset_tag(s), 1000 + d));
    const Mat EA = random_direction(inst.A.rows(), inst.A.cols(), 1.0, rng);
    const Mat EB = random_direction(B_S.rows(), B_S.cols(), 1.0, rng);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double eps : epsilons) {
      const auto ce = riccati_backward(inst.A + eps * EA, B_S + eps * EB, rc.Q, rc.Qf, rc.R, N);
      const double gap = cost_gap_both(inst.A, B_S, tru, ce, rc.Q, rc.R, inst.sigma).by_gain_error;
      const double x = std::log(eps), y = std::log(gap);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double m = static_cast<double>(epsilons.size());
    total += (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return total / directions;
}

BoundReport verify_transition_bounds(const SystemInstance& inst, const CostSchedule& costs,
                                     const ConstantsProfile& c, const ActuatorSubset& s,
                                     const VerifyOptions& opts) {
  BoundReport rep;
  const SubsetConstants& sc = c.at(s);
  const Mat B_S = restrict_input(inst.B, s);
  const int N = c.N;
  for (const auto& tp : true_schedules(inst, costs, s, N)) {
    const auto M = closed_loops(inst.A, B_S, tp.sched.gains);
    const auto tab = transition_products(M);
    for (int d = 0; d <= N; ++d) {
      double worst = 0.0;
      for (int k1 = 0; k1 + d <= N; ++k1) worst = std::max(worst, spectral_norm(tab[k1][d]));
      rep.add(make_row("lemma5", s, 0.0, d, worst,
                       scale_rhs(sc.zeta * std::pow(sc.eta, d), opts.rhs_scale), true));
    }
  }
  for_each_draw(inst, costs, s, opts, subset_tag(s) * 3 + 4, N,
                [&](const CostMatrices& rc, double eps, const Perturbation& p, Rng& rng) {
    const auto tru = riccati_backward(inst.A, B_S, rc.Q, rc.Qf, rc.R, N);
    const auto M = closed_loops(inst.A, B_S, tru.gains);
    // lemma6: CE gains of the perturbed model, run on the true system.
    try {
      const auto ce = riccati_backward(inst.A + p.E_A, B_S + p.E_B, rc.Q, rc.Qf, rc.R, N);
      double dk = 0.0;
      for (int k = 0; k < N; ++k) dk = std::max(dk, spectral_norm(ce.gains[k] - tru.gains[k]));
      const bool hyp = dk <= (1.0 - sc.eta) / (2.0 * sc.B_norm * sc.zeta);
      const auto tab = transition_products(closed_loops(inst.A, B_S, ce.gains));
      for (int d = 0; d <= N; ++d) {
        double worst = 0.0;
        for (int k1 = 0; k1 + d <= N; ++k1) worst = std::max(worst, spectral_norm(tab[k1][d]));
        rep.add(make_row("lemma6", s, eps, d, worst,
                         scale_rhs(sc.zeta * std::pow((1.0 + sc.eta) / 2.0, d), opts.rhs_scale), hyp));
      }
    } catch (const NumericalError&) {
      rep.add(make_row("lemma6", s, eps, 0, INFINITY, 0.0, false));
    }
    // lemma11: arbitrary perturbations with ||Delta_k|| <= eps.
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Mat> Mp;
    for (const auto& m : M)
      Mp.push_back(m + random_direction(m.rows(), m.cols(), eps * (1.0 - u(rng)), rng));
    const auto tab = transition_products(Mp);
    for (int d = 1; d <= N; ++d) {
      double worst = 0.0;
      for (int k1 = 0; k1 + d <= N; ++k1) worst = std::max(worst, spectral_norm(tab[k1][d]));
      rep.add(make_row("lemma11", s, eps, d, worst,
                       scale_rhs(sc.zeta * std::pow(sc.zeta * eps + sc.eta, d), opts.rhs_scale), true));
    }
  });
  return rep;
}

BoundReport verify_gain_convergence(const SystemInstance& inst, const CostSchedule& costs,
                                    const ActuatorSubset& s, const std::vector<int>& horizons,
                                    double rhs_scale) {
  BoundReport rep;
  const Mat B_S = restrict_input(inst.B, s);
  for (int N : horizons) {
    const ConstantsProfile c = estimate_constants(inst, costs, N);
    const double Gamma = c.at(s).Gamma;
    for (const auto& entry : costs.entries()) {
      const Mat R_S = restrict_cost(entry.R, s);
      const auto inf = solve_dare(inst.A, B_S, entry.Q, R_S);
      const Mat L = inst.A + B_S * inf.K;
      const auto [zp, ep] = fit_power_decay(std::span<const Mat>(&L, 1));
      if (!(ep < 1.0)) throw NumericalError("lemma12: infinite-horizon closed loop not contracting");
      const auto sched = riccati_backward(inst.A, B_S, entry.Q, entry.Qf, R_S, N);
      const auto tab = transition_products(closed_loops(inst.A, B_S, sched.gains));
      double psi = 0.0;
      for (int k = 1; k <= N; ++k) psi = std::max(psi, spectral_norm(tab[k][N - k]));
      const double normP = spectral_norm(inf.P);
      const double coeff =
          psi * zp * (Gamma + normP) * Gamma * (1.0 + 2.0 * normP * std::pow(Gamma, 3));
      Mat Lt_pow = Mat::Identity(inst.n, inst.n);  // (L')^{N-k}, built as k decreases
      for (int k = N; k >= 1; --k) {
        if (k < N) Lt_pow = Lt_pow * L.transpose();
        const Mat dP = sched.values[k] - inf.P;
        const Mat product = Lt_pow * (entry.Qf - inf.P) * tab[k][N - k];
        const double scale = 1.0 + spectral_norm(dP);
        rep.add(make_row("lemma12_identity", s, 0.0, k, spectral_norm(dP - product),
                         1e-8 * scale, true));
        const bool hyp = spectral_norm(B_S.transpose() * dP * B_S) <= 0.5;
        rep.add(make_row("lemma12_K", s, 0.0, k - 1, spectral_norm(sched.gains[k - 1] - inf.K),
                         rhs_scale * coeff * std::pow(ep, N - k), hyp));
      }
    }
  }
  return rep;
}

BoundReport verify_lse_error_bound(const SystemInstance& inst, const std::vector<Estimate>& estimates,
                                   double delta, double epsilon0, bool tau1_from_theorem) {
  BoundReport rep;
  for (const auto& est : estimates) {
    const auto errs = estimation_error(est, inst);
    for (std::size_t j = 0; j < est.groups.size(); ++j) {
      const auto& g = est.groups[j];
      const Mat theta = true_theta(inst, static_cast<int>(j));
      const double rhs = self_normalized_bound(g.V, est.lambda, inst.sigma, inst.n, delta, theta);
      rep.add(make_row("lemma7", g.group, delta, est.epoch, errs[j].trace_form, rhs, true));
      rep.add(make_row("lemma9", g.group, epsilon0, est.epoch, errs[j].spectral,
                       std::sqrt(epsilon0 * epsilon0 / est.epoch), tau1_from_theorem));
    }
  }
  return rep;
}

// --- campaign -------------------------------------------------------------

CampaignResult run_bound_campaign(const CampaignConfig& cfg) {
  struct Slot {
    BoundReport report;
    std::vector<double> slopes;
    bool skipped = false;
  };
  std::vector<Slot> slots(cfg.instances);
  detail::parallel_for(cfg.instances, cfg.workers, [&](int i) {
    GeneratorParams gp = cfg.generator;
    gp.seed = cfg.generator.seed + static_cast<std::uint64_t>(i);
    const SystemInstance inst = generate_random_instance(gp);
    const CostSchedule costs = CostSchedule::identity_family(inst.n, inst.m(), 1);
    ConstantsProfile c;
    try {
      c = estimate_constants(inst, costs, cfg.N);
    } catch (const NumericalError&) {
      slots[i].skipped = true;
      return;
    }
    VerifyOptions vo = cfg.verify;
    vo.seed = derive_seed(cfg.verify.seed, static_cast<std::uint64_t>(i), 77);
    Slot& out = slots[i];
    for (const auto& s : inst.candidate_subsets()) {
      out.report.append(verify_gain_value_perturbation(inst, costs, c, s, vo));
      out.report.append(verify_controllability_perturbation(inst, c, s, vo));
      out.report.append(verify_cost_gap_bound(inst, costs, c, s, vo));
      out.report.append(verify_transition_bounds(inst, costs, c, s, vo));
      out.report.append(verify_gain_convergence(inst, costs, s, {cfg.N}, vo.rhs_scale));
      out.slopes.push_back(cost_gap_slope(inst, costs.at(0), cfg.N, s, cfg.slope_epsilons,
                                          cfg.slope_directions, vo.seed));
    }
  });
  CampaignResult res;
  for (auto& s : slots) {
    res.report.append(s.report);
    res.slopes.insert(res.slopes.end(), s.slopes.begin(), s.slopes.end());
    res.instances_skipped += s.skipped;
  }
  return res;
}

LseCampaign run_lse_campaign(const SystemInstance& inst, int N, int tau1, int epochs, int seeds,
                             double delta, double lambda, std::uint64_t seed, int workers) {
  if (seeds < 1 || epochs < 1 || tau1 < 1) throw ConfigError("lse campaign needs positive sizes");
  std::vector<BoundReport> reports(seeds);
  LseCampaign out;
  out.errors.assign(seeds, std::vector<double>(epochs, 0.0));
  detail::parallel_for(seeds, workers, [&](int r) {
    const std::uint64_t master = derive_seed(seed, static_cast<std::uint64_t>(r), 91);
    GramAccumulator gram(inst);
    std::vector<Estimate> estimates;
    long t = 0;
    for (int i = 1; i <= epochs; ++i) {
      for (int j = 0; j < inst.groups(); ++j)
        for (int k = 0; k < tau1; ++k, ++t) {
          Rng rng = make_stream(master, static_cast<std::uint64_t>(t), Stream::kDynamics);
          const CostMatrices c{Mat::Identity(inst.n, inst.n), 2.0 * Mat::Identity(inst.n, inst.n),
                               Mat::Identity(inst.m(), inst.m())};
          gram.add(j, rollout_exploration(inst, j, c, N, static_cast<int>(t), rng));
        }
      estimates.push_back(gram.fit(lambda, i));
      double worst = 0.0;
      for (const auto& e : estimation_error(estimates.back(), inst)) worst = std::max(worst, e.spectral);
      out.errors[r][i - 1] = worst;
    }
    for (auto& row : verify_lse_error_bound(inst, estimates, delta, 0.0, false).rows)
      if (row.lemma == "lemma7") reports[r].add(std::move(row));
  });
  int clean = 0;
  for (const auto& rep : reports) {
    clean += rep.violations(true) == 0;
    out.report.append(rep);
  }
  out.lemma7_frequency = static_cast<double>(clean) / seeds;
  return out;
}

double probabilistic_slack(double delta, int seeds) {
  return delta + 3.0 * std::sqrt(delta * (1.0 - delta) / seeds);
}

}  // namespace actsel
