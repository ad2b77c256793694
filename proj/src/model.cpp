#include "actsel/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "actsel/errors.hpp"
#include "json_io.hpp"

namespace actsel {

namespace {

constexpr double kMarginFloor = 1e-8;
constexpr const char* kInstanceFormat = "actsel-instance";
constexpr int kInstanceVersion = 1;

}  // namespace

std::string ActuatorSubset::label() const {
  std::string out = "{";
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(indices[i] + 1);
  }
  return out + "}";
}

ActuatorSubset make_subset(std::vector<int> indices, std::span<const int> block_widths) {
  const int q = static_cast<int>(block_widths.size());
  ActuatorSubset s;
  std::vector<int> offsets(q + 1, 0);
  for (int i = 0; i < q; ++i) offsets[i + 1] = offsets[i] + block_widths[i];
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const int idx = indices[k];
    if (idx < 0 || idx >= q)
      throw ConfigError("actuator index " + std::to_string(idx) + " out of range [0," +
                        std::to_string(q) + ")");
    if (k > 0 && idx <= indices[k - 1])
      throw ConfigError("actuator indices must be strictly increasing");
    for (int c = offsets[idx]; c < offsets[idx + 1]; ++c) s.columns.push_back(c);
  }
  s.indices = std::move(indices);
  return s;
}

std::uint64_t binomial(int q, int h, std::uint64_t cap) {
  if (h < 0 || q < 0 || h > q) return 0;
  h = std::min(h, q - h);
  unsigned __int128 result = 1;
  for (int i = 1; i <= h; ++i) {
    // Intermediate values are C(q - h + i, i), increasing in i.
    result = result * static_cast<unsigned>(q - h + i) / static_cast<unsigned>(i);
    if (result > cap)
      throw ConfigError("C(" + std::to_string(q) + "," + std::to_string(h) +
                        ") exceeds the action cap " + std::to_string(cap));
  }
  return static_cast<std::uint64_t>(result);
}

std::vector<std::vector<int>> all_subsets(int q, int h) {
  std::vector<std::vector<int>> out;
  if (h < 1 || h > q) return out;
  std::vector<int> cur(h);
  std::iota(cur.begin(), cur.end(), 0);
  while (true) {
    out.push_back(cur);
    int i = h - 1;
    while (i >= 0 && cur[i] == q - h + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < h; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

std::vector<std::vector<int>> default_partition(int q, int h) {
  if (q < 1 || h < 1) throw ConfigError("default_partition needs q >= 1 and H >= 1");
  std::vector<std::vector<int>> groups;
  for (int start = 0; start < q; start += h) {
    std::vector<int> g;
    for (int i = start; i < std::min(q, start + h); ++i) g.push_back(i);
    groups.push_back(std::move(g));
  }
  return groups;
}

int SystemInstance::m() const {
  return std::accumulate(block_widths.begin(), block_widths.end(), 0);
}

ActuatorSubset SystemInstance::subset(std::vector<int> indices) const {
  return make_subset(std::move(indices), block_widths);
}

ActuatorSubset SystemInstance::group_subset(int j) const { return subset(partition.at(j)); }

std::vector<ActuatorSubset> SystemInstance::candidate_subsets() const {
  std::vector<ActuatorSubset> out;
  for (auto& idx : all_subsets(q, H)) out.push_back(subset(std::move(idx)));
  return out;
}

Mat controllability_matrix(const Mat& A, const Mat& B_S, int ell) {
  if (ell < 1) throw ConfigError("controllability depth must be >= 1");
  if (B_S.rows() != A.rows()) throw ConfigError("B_S must have n rows");
  const auto n = A.rows();
  const auto w = B_S.cols();
  Mat C(n, w * ell);
  Mat block = B_S;
  for (int i = 0; i < ell; ++i) {
    C.middleCols(i * w, w) = block;
    block = A * block;
  }
  return C;
}

double controllability_margin(const Mat& A, const Mat& B_S, int ell) {
  const Mat C = controllability_matrix(A, B_S, ell);
  if (C.cols() < A.rows() || C.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(C);
  return svd.singularValues()(A.rows() - 1);
}

DareSolution solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, double tol,
                        int max_iter) {
  Mat P = Q;
  for (int it = 1; it <= max_iter; ++it) {
    const Mat BtP = B.transpose() * P;
    Eigen::LLT<Mat> llt(BtP * B + R);
    if (llt.info() != Eigen::Success)
      throw NumericalError("DARE iteration " + std::to_string(it) + ": B'PB + R not PD");
    const Mat K = -llt.solve(BtP * A);
    Mat next = symmetrize(Q + A.transpose() * P * A + A.transpose() * BtP.transpose() * K);
    if (!next.allFinite()) throw NumericalError("DARE iteration diverged");
    const double delta = (next - P).norm();
    P = std::move(next);
    if (delta < tol) {
      const Mat BtP2 = B.transpose() * P;
      Mat Kfix = -(BtP2 * B + R).llt().solve(BtP2 * A);
      return {P, Kfix, it};
    }
  }
  throw NumericalError("DARE did not converge within " + std::to_string(max_iter) +
                       " iterations (uncontrollable or ill-conditioned pair?)");
}

Mat compute_stabilizing_gain(const Mat& A, const Mat& B_G, const Mat& Q, const Mat& R_G) {
  DareSolution sol = solve_dare(A, B_G, Q, R_G);
  const double rho = spectral_radius(A + B_G * sol.K);
  if (!(rho < 1.0))
    throw NumericalError("stabilizing gain check failed: closed-loop spectral radius " +
                         std::to_string(rho));
  return sol.K;
}

Mat restrict_input(const Mat& B, const ActuatorSubset& s) {
  Mat out(B.rows(), s.input_dim());
  for (int c = 0; c < s.input_dim(); ++c) {
    if (s.columns[c] >= B.cols()) throw ConfigError("subset column out of range of B");
    out.col(c) = B.col(s.columns[c]);
  }
  return out;
}

Mat restrict_cost(const Mat& R, const ActuatorSubset& s) {
  const int w = s.input_dim();
  Mat out(w, w);
  for (int i = 0; i < w; ++i) {
    for (int j = 0; j < w; ++j) {
      if (s.columns[i] >= R.rows() || s.columns[j] >= R.cols())
        throw ConfigError("subset column out of range of R");
      out(i, j) = R(s.columns[i], s.columns[j]);
    }
  }
  return out;
}

std::pair<double, double> fit_power_decay(std::span<const Mat> closed_loops, int k_max) {
  double rho = 0.0;
  for (const auto& M : closed_loops) rho = std::max(rho, spectral_radius(M));
  if (!(rho < 1.0)) throw NumericalError("closed loop is not Schur stable");
  const double eta = 0.5 * (1.0 + rho);
  double zeta = 1.0;
  for (const auto& M : closed_loops) {
    Mat power = Mat::Identity(M.rows(), M.cols());
    for (int k = 1; k <= k_max; ++k) {
      power = power * M;
      zeta = std::max(zeta, spectral_norm(power) / std::pow(eta, k));
    }
  }
  return {zeta, eta};
}

void validate_instance(const SystemInstance& inst) {
  const auto fail = [](const std::string& what) { throw ConfigError("instance: " + what); };
  if (inst.n < 1) fail("n must be >= 1");
  if (inst.q < 1 || inst.H < 1 || inst.H > inst.q) fail("need 1 <= H <= q");
  if (static_cast<int>(inst.block_widths.size()) != inst.q) fail("block_widths must have q entries");
  for (int w : inst.block_widths)
    if (w < 1) fail("block widths must be positive");
  const int m = inst.m();
  if (inst.A.rows() != inst.n || inst.A.cols() != inst.n) fail("A must be n x n");
  if (inst.B.rows() != inst.n || inst.B.cols() != m) fail("B must be n x m");
  if (!(inst.sigma >= 0.0)) fail("sigma must be >= 0");

  std::vector<int> seen(inst.q, 0);
  for (const auto& g : inst.partition) {
    if (g.empty() || static_cast<int>(g.size()) > inst.H) fail("partition group size must be in [1, H]");
    for (int i : g) {
      if (i < 0 || i >= inst.q) fail("partition index out of range");
      if (seen[i]++) fail("partition groups overlap");
    }
  }
  if (std::count(seen.begin(), seen.end(), 1) != inst.q) fail("partition does not cover all actuators");

  if (inst.stabilizing_gains.size() != inst.partition.size()) fail("one stabilizing gain per group");
  double max_gain = 0.0;
  for (int j = 0; j < inst.groups(); ++j) {
    const auto g = inst.group_subset(j);
    const Mat& K = inst.stabilizing_gains[j];
    if (K.rows() != g.input_dim() || K.cols() != inst.n) fail("stabilizing gain shape");
    const Mat L = inst.A + restrict_input(inst.B, g) * K;
    if (!(spectral_radius(L) < 1.0)) fail("group " + std::to_string(j) + " gain is not stabilizing");
    Mat power = Mat::Identity(inst.n, inst.n);
    for (int k = 1; k <= 50; ++k) {
      power = power * L;
      if (spectral_norm(power) > inst.zeta0 * std::pow(inst.eta0, k) * (1.0 + 1e-9))
        fail("power bound zeta0 * eta0^k violated for group " + std::to_string(j));
    }
    max_gain = std::max(max_gain, spectral_norm(K));
  }
  if (!(inst.zeta0 >= 1.0) || !(inst.eta0 > 0.0 && inst.eta0 < 1.0)) fail("need zeta0 >= 1, 0 < eta0 < 1");
  if (!(inst.kappa >= 1.0) || inst.kappa < max_gain * (1.0 - 1e-12)) fail("kappa below max gain norm");
  if (inst.ell < 1 || inst.ell > inst.n) fail("ell must be in [1, n]");
  if (!(inst.nu > 0.0)) fail("nu must be positive");
  for (const auto& s : inst.candidate_subsets()) {
    const double margin = controllability_margin(inst.A, restrict_input(inst.B, s), inst.ell);
    if (margin < inst.nu * (1.0 - 1e-9)) fail("subset " + s.label() + " below controllability margin");
  }
}

SystemInstance generate_random_instance(const GeneratorParams& params) {
  if (params.n < 1) throw ConfigError("n must be >= 1");
  if (params.H < 1 || params.q < params.H)
    throw ConfigError("need q >= H >= 1 (got q=" + std::to_string(params.q) +
                      ", H=" + std::to_string(params.H) + ")");
  if (!(params.spectral_radius_target > 0.0)) throw ConfigError("spectral radius target must be > 0");
  if (!(params.sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  std::vector<int> widths = params.block_widths;
  if (widths.empty()) widths.assign(params.q, 1);
  if (static_cast<int>(widths.size()) != params.q) throw ConfigError("block_widths must have q entries");
  for (int w : widths)
    if (w < 1) throw ConfigError("block widths must be positive");
  binomial(params.q, params.H);

  SystemInstance inst;
  inst.n = params.n;
  inst.q = params.q;
  inst.H = params.H;
  inst.block_widths = widths;
  inst.sigma = params.sigma;
  inst.seed = params.seed;
  inst.partition = default_partition(params.q, params.H);
  const int m = inst.m();
  const auto subsets = inst.candidate_subsets();

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::string last_reason = "no attempts made";

  for (int attempt = 0; attempt < params.max_retries; ++attempt) {
    Mat A(params.n, params.n);
    Mat B(params.n, m);
    for (Eigen::Index i = 0; i < A.size(); ++i) A(i) = normal(rng);
    for (Eigen::Index i = 0; i < B.size(); ++i) B(i) = normal(rng);
    const double rho = spectral_radius(A);
    if (!(rho > 1e-12)) {
      last_reason = "degenerate A";
      continue;
    }
    A *= params.spectral_radius_target / rho;

    int ell = 0;
    double nu = 0.0;
    for (int depth = 1; depth <= params.n && ell == 0; ++depth) {
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& s : subsets)
        worst = std::min(worst, controllability_margin(A, restrict_input(B, s), depth));
      if (worst > kMarginFloor) {
        ell = depth;
        nu = worst;
      }
    }
    if (ell == 0) {
      last_reason = "some size-H subset is not controllable within depth n";
      continue;
    }

    std::vector<Mat> gains;
    std::vector<Mat> loops;
    try {
      for (std::size_t j = 0; j < inst.partition.size(); ++j) {
        const auto g = make_subset(inst.partition[j], widths);
        const Mat Bg = restrict_input(B, g);
        Mat K = compute_stabilizing_gain(A, Bg, Mat::Identity(params.n, params.n),
                                         Mat::Identity(g.input_dim(), g.input_dim()));
        loops.push_back(A + Bg * K);
        gains.push_back(std::move(K));
      }
    } catch (const NumericalError& e) {
      last_reason = std::string("stabilizing gain: ") + e.what();
      continue;
    }

    inst.A = std::move(A);
    inst.B = std::move(B);
    inst.ell = ell;
    inst.nu = nu;
    inst.kappa = 1.0;
    for (const auto& K : gains) inst.kappa = std::max(inst.kappa, spectral_norm(K));
    inst.stabilizing_gains = std::move(gains);
    std::tie(inst.zeta0, inst.eta0) = fit_power_decay(loops);
    validate_instance(inst);
    return inst;
  }
  std::ostringstream msg;
  msg << "no controllable instance found after " << params.max_retries << " draws (n=" << params.n
      << ", q=" << params.q << ", H=" << params.H << ", m=" << m << "); last failure: " << last_reason;
  throw ConfigError(msg.str());
}

// --- cost schedule --------------------------------------------------------

CostSchedule::CostSchedule(std::vector<CostMatrices> entries, std::vector<int> round_to_entry)
    : entries_(std::move(entries)), round_to_entry_(std::move(round_to_entry)) {
  if (entries_.empty() || round_to_entry_.empty()) throw ConfigError("cost schedule is empty");
  const auto n = entries_.front().Q.rows();
  const auto m = entries_.front().R.rows();
  for (const auto& e : entries_) {
    if (e.Q.rows() != n || e.Q.cols() != n || e.Qf.rows() != n || e.Qf.cols() != n)
      throw ConfigError("cost schedule: Q and Q_f must be n x n");
    if (e.R.rows() != m || e.R.cols() != m) throw ConfigError("cost schedule: R must be m x m");
    if (min_eigenvalue_sym(e.Q) < 1.0 - 1e-12) throw ConfigError("cost schedule: need sigma_n(Q) >= 1");
    if (min_eigenvalue_sym(e.R) < 1.0 - 1e-12) throw ConfigError("cost schedule: need sigma_m(R) >= 1");
    if (!(min_eigenvalue_sym(e.Qf) > 0.0)) throw ConfigError("cost schedule: Q_f must be positive definite");
    sigma_Q_ = std::max({sigma_Q_, spectral_norm(e.Q), spectral_norm(e.Qf)});
    sigma_R_ = std::max(sigma_R_, spectral_norm(e.R));
  }
  for (int idx : round_to_entry_)
    if (idx < 0 || idx >= static_cast<int>(entries_.size()))
      throw ConfigError("cost schedule: round maps to a missing entry");
}

CostSchedule CostSchedule::identity_family(int n, int m, int rounds, double q_scale,
                                           double qf_scale, double r_scale) {
  CostMatrices c{q_scale * Mat::Identity(n, n), qf_scale * Mat::Identity(n, n),
                 r_scale * Mat::Identity(m, m)};
  return CostSchedule({std::move(c)}, std::vector<int>(rounds, 0));
}

CostSchedule CostSchedule::sinusoidal(int n, std::span<const int> block_widths, int rounds,
                                      double amplitude, int period) {
  if (period < 1) throw ConfigError("sinusoidal schedule: period must be >= 1");
  const int q = static_cast<int>(block_widths.size());
  const int m = std::accumulate(block_widths.begin(), block_widths.end(), 0);
  std::vector<CostMatrices> entries;
  for (int t = 0; t < period; ++t) {
    Vec diag(m);
    int col = 0;
    for (int i = 0; i < q; ++i) {
      const double phase = 2.0 * std::numbers::pi * i / q;
      const double scale =
          1.0 + amplitude * 0.5 * (1.0 + std::sin(2.0 * std::numbers::pi * t / period + phase));
      for (int c = 0; c < block_widths[i]; ++c) diag(col++) = scale;
    }
    entries.push_back({Mat::Identity(n, n), 2.0 * Mat::Identity(n, n), diag.asDiagonal()});
  }
  std::vector<int> map(rounds);
  for (int t = 0; t < rounds; ++t) map[t] = t % period;
  return CostSchedule(std::move(entries), std::move(map));
}

// --- serialization --------------------------------------------------------

std::string serialize_instance(const SystemInstance& inst) {
  using nlohmann::json;
  json j;
  j["format"] = kInstanceFormat;
  j["version"] = kInstanceVersion;
  j["provenance"] = {{"seed", inst.seed}, {"generator", "actsel-normal-v1"}};
  j["n"] = inst.n;
  j["q"] = inst.q;
  j["H"] = inst.H;
  j["block_widths"] = inst.block_widths;
  j["sigma"] = inst.sigma;
  j["A"] = detail::matrix_to_json(inst.A);
  j["B"] = detail::matrix_to_json(inst.B);
  j["partition"] = inst.partition;
  auto gains = json::array();
  for (const auto& K : inst.stabilizing_gains) gains.push_back(detail::matrix_to_json(K));
  j["stabilizing_gains"] = std::move(gains);
  j["kappa"] = inst.kappa;
  j["ell"] = inst.ell;
  j["nu"] = inst.nu;
  j["zeta0"] = inst.zeta0;
  j["eta0"] = inst.eta0;
  return j.dump(2) + "\n";
}

SystemInstance parse_instance(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("instance file is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != kInstanceFormat) throw ConfigError("not an actsel instance file");
    if (j.at("version").get<int>() != kInstanceVersion)
      throw ConfigError("unsupported instance version " + j.at("version").dump());
    SystemInstance inst;
    inst.seed = j.at("provenance").value("seed", std::uint64_t{0});
    inst.n = j.at("n").get<int>();
    inst.q = j.at("q").get<int>();
    inst.H = j.at("H").get<int>();
    inst.block_widths = j.at("block_widths").get<std::vector<int>>();
    inst.sigma = j.at("sigma").get<double>();
    inst.A = detail::matrix_from_json(j.at("A"), inst.n);
    inst.B = detail::matrix_from_json(j.at("B"));
    inst.partition = j.at("partition").get<std::vector<std::vector<int>>>();
    for (const auto& K : j.at("stabilizing_gains")) inst.stabilizing_gains.push_back(detail::matrix_from_json(K));
    inst.kappa = j.at("kappa").get<double>();
    inst.ell = j.at("ell").get<int>();
    inst.nu = j.at("nu").get<double>();
    inst.zeta0 = j.at("zeta0").get<double>();
    inst.eta0 = j.at("eta0").get<double>();
    validate_instance(inst);
    return inst;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed instance file: ") + e.what());
  }
}

void save_instance(const SystemInstance& inst, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << serialize_instance(inst);
}

SystemInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_instance(buf.str());
}

}  // namespace actsel
