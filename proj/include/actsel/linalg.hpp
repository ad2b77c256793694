#pragma once

#include <Eigen/Dense>

namespace actsel {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Largest singular value; 0 for empty matrices.
double spectral_norm(const Mat& M);

/// Smallest of the min(rows, cols) singular values; 0 for empty matrices.
double min_singular_value(const Mat& M);

/// Max modulus of the eigenvalues of a square matrix.
double spectral_radius(const Mat& M);

/// (M + M^T) / 2.
inline Mat symmetrize(const Mat& M) { return 0.5 * (M + M.transpose()); }

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue_sym(const Mat& M);

/// Largest eigenvalue of a symmetric matrix.
double max_eigenvalue_sym(const Mat& M);

bool all_finite(const Mat& M);

}  // namespace actsel
