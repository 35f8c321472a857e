#pragma once

#include <json.hpp>

#include "hybridkernel/kernels.hpp"
#include "hybridkernel/linalg.hpp"

namespace hybridkernel::json_util {

inline nlohmann::json vector_json(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

/// Row-major nested arrays.
inline nlohmann::json matrix_json(const Matrix& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Vector row = m.row(i).transpose();
    out.push_back(vector_json(row));
  }
  return out;
}

inline Vector vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) m.row(i) = vector_from_json(j.at(i)).transpose();
  return m;
}

inline nlohmann::json kernel_json(const KernelSpec& k) {
  return {{"family", "gaussian"}, {"gamma", k.gamma()}};
}

}  // namespace hybridkernel::json_util
