#include "actsel/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace actsel {

double spectral_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

double min_singular_value(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  const auto& s = svd.singularValues();
  return s(s.size() - 1);
}

double spectral_radius(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(M, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_eigenvalue_sym(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eigenvalue_sym(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

bool all_finite(const Mat& M) { return M.allFinite(); }

}  // namespace actsel
