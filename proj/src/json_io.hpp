#pragma once

#include <json.hpp>

#include "actsel/errors.hpp"
#include "actsel/linalg.hpp"

namespace actsel::detail {

inline nlohmann::json matrix_to_json(const Mat& M) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Row-major nested arrays. `cols_hint` gives the width of an empty-row matrix.
inline Mat matrix_from_json(const nlohmann::json& j, Eigen::Index cols_hint = 0) {
  if (!j.is_array()) throw ConfigError("matrix must be a nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : cols_hint;
  Mat M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError("ragged matrix row " + std::to_string(r));
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = row[c].get<double>();
  }
  return M;
}

}  // namespace actsel::detail
