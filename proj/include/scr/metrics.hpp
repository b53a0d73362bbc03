#pragma once

#include <cmath>
#include <stdexcept>

#include "scr/dag.hpp"
#include "scr/tensor.hpp"

namespace scr {

// Scale-invariant depth error: population standard deviation of the per-pixel
// log-depth difference.
inline double side(const Tensor& pred, const Tensor& gt) {
  if (!pred.same_shape(gt)) throw std::invalid_argument("side: shape mismatch");
  const std::size_t n = pred.numel();
  if (n == 0) throw std::invalid_argument("side: empty grids");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(pred[i] > 0.0) || !(gt[i] > 0.0)) {
      throw std::invalid_argument("side: depths must be strictly positive");
    }
    mean += std::log(pred[i]) - std::log(gt[i]);
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::log(pred[i]) - std::log(gt[i]) - mean;
    var += d * d;
  }
  return std::sqrt(var / static_cast<double>(n));
}

namespace detail {
// Unnormalized surface normal (-dx, -dy, 1) from central differences.
inline void normal_at(const Tensor& d, int r, int c, double out[3]) {
  out[0] = -0.5 * (d.at(r, c + 1) - d.at(r, c - 1));
  out[1] = -0.5 * (d.at(r + 1, c) - d.at(r - 1, c));
  out[2] = 1.0;
}
}  // namespace detail

// Mean angle deviation (degrees) between surface normals of the two height
// fields, averaged over interior pixels. atan2 of the cross/dot products is
// exact on identical inputs and accurate for small angles.
inline double mad_degrees(const Tensor& pred, const Tensor& gt) {
  if (!pred.same_shape(gt)) throw std::invalid_argument("mad: shape mismatch");
  if (pred.ndim() != 2 || pred.dim(0) < 3 || pred.dim(1) < 3) {
    throw std::invalid_argument("mad: grids must be at least 3x3");
  }
  const int rows = pred.dim(0), cols = pred.dim(1);
  double acc = 0.0;
  int count = 0;
  for (int r = 1; r + 1 < rows; ++r) {
    for (int c = 1; c + 1 < cols; ++c) {
      double a[3], b[3];
      detail::normal_at(pred, r, c, a);
      detail::normal_at(gt, r, c, b);
      const double cx = a[1] * b[2] - a[2] * b[1];
      const double cy = a[2] * b[0] - a[0] * b[2];
      const double cz = a[0] * b[1] - a[1] * b[0];
      const double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
      const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
      acc += std::atan2(cross, dot);
      ++count;
    }
  }
  const double rad_to_deg = 57.295779513082320876798154814105;
  return rad_to_deg * acc / static_cast<double>(count);
}

struct StructureRecovery {
  int shd = 0;
  double precision = 1.0;
  double recall = 1.0;
};

// Directed-edge precision/recall plus structural Hamming distance (a reversed
// edge counts as one step). Precision is 1 when nothing was predicted; recall
// is 1 when the ground truth has no edges.
inline StructureRecovery structure_recovery(const AdjacencyMatrix& learned,
                                            const AdjacencyMatrix& gt) {
  if (learned.n != gt.n) throw std::invalid_argument("structure_recovery: size mismatch");
  if (!learned.is_binary() || !gt.is_binary()) {
    throw std::invalid_argument("structure_recovery: inputs must be binary");
  }
  StructureRecovery out;
  int tp = 0, fp = 0, fn = 0;
  for (int j = 0; j < learned.n; ++j) {
    for (int k = 0; k < learned.n; ++k) {
      if (j == k) continue;
      const bool l = learned.at(j, k) != 0.0;
      const bool g = gt.at(j, k) != 0.0;
      if (l && g) ++tp;
      if (l && !g) ++fp;
      if (!l && g) ++fn;
    }
  }
  for (int j = 0; j < learned.n; ++j) {
    for (int k = j + 1; k < learned.n; ++k) {
      // pair state in {none, j->k, k->j, both}
      const int ls = (learned.at(j, k) != 0.0 ? 1 : 0) + (learned.at(k, j) != 0.0 ? 2 : 0);
      const int gs = (gt.at(j, k) != 0.0 ? 1 : 0) + (gt.at(k, j) != 0.0 ? 2 : 0);
      if (ls != gs) ++out.shd;
    }
  }
  out.precision = (tp + fp) == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
  out.recall = (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn);
  return out;
}

}  // namespace scr
