#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace selfplay {

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;

// A parameter set viewed as an ordered list of tensors. Gradients and Adam
// moments share this layout.
using TensorList = std::vector<RealMatrix>;

inline bool all_finite(const RealMatrix& m) { return m.allFinite(); }

inline bool all_finite(const TensorList& ts) {
  for (const auto& t : ts)
    if (!t.allFinite()) return false;
  return true;
}

inline TensorList zeros_like(const TensorList& ts) {
  TensorList out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(RealMatrix::Zero(t.rows(), t.cols()));
  return out;
}

inline bool same_shapes(const TensorList& a, const TensorList& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) return false;
  return true;
}

inline double global_norm(const TensorList& ts) {
  double s = 0.0;
  for (const auto& t : ts) s += t.squaredNorm();
  return std::sqrt(s);
}

}  // namespace selfplay
