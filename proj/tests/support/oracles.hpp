#pragma once

// Test-only oracles, kept independent of the library code paths they check.

#include <cmath>
#include <functional>
#include <vector>

#include "scr/dag.hpp"
#include "scr/tensor.hpp"

namespace oracles {

// Three-color DFS cycle detection over entries > threshold.
inline bool dfs_acyclic(const scr::AdjacencyMatrix& m, double threshold = 0.0) {
  const int n = m.n;
  std::vector<int> color(static_cast<std::size_t>(n), 0);  // 0 white, 1 gray, 2 black
  std::function<bool(int)> visit = [&](int v) {
    color[static_cast<std::size_t>(v)] = 1;
    for (int k = 0; k < n; ++k) {
      if (k == v || !(m.at(v, k) > threshold)) continue;
      if (color[static_cast<std::size_t>(k)] == 1) return false;
      if (color[static_cast<std::size_t>(k)] == 0 && !visit(k)) return false;
    }
    color[static_cast<std::size_t>(v)] = 2;
    return true;
  };
  for (int v = 0; v < n; ++v) {
    if (color[static_cast<std::size_t>(v)] == 0 && !visit(v)) return false;
  }
  return true;
}

// Central finite difference of f at x along coordinate i.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x, std::size_t i, double h = 1e-5) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

// |a - b| relative to max(|a|, |b|, floor).
inline double rel_err(double a, double b, double floor = 1e-8) {
  const double scale = std::max({std::fabs(a), std::fabs(b), floor});
  return std::fabs(a - b) / scale;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n) {
  auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    }
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::fabs(at(p, q)) < 1e-18) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = at(i, i);
  return eig;
}

}  // namespace oracles
