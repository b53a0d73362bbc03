#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scr/hexfloat.hpp"
#include "scr/tape.hpp"

namespace scr {

// Factor index convention used across the pipeline.
inline constexpr int kFactorV = 0;
inline constexpr int kFactorD = 1;
inline constexpr int kFactorL = 2;
inline constexpr int kFactorA = 3;
inline constexpr std::array<char, 4> kFactorLabels = {'V', 'D', 'L', 'A'};

// Weighted directed adjacency over latent factors; w[j*n+k] is the weight of
// edge j -> k. Diagonal is identically zero.
struct AdjacencyMatrix {
  int n = 0;
  std::vector<double> w;

  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(int n_) : n(n_), w(static_cast<std::size_t>(n_) * n_, 0.0) {
    if (n_ < 1) throw std::invalid_argument("AdjacencyMatrix: n must be positive");
  }

  double& at(int j, int k) { return w[static_cast<std::size_t>(j) * n + k]; }
  double at(int j, int k) const { return w[static_cast<std::size_t>(j) * n + k]; }

  void zero_diagonal() {
    for (int i = 0; i < n; ++i) at(i, i) = 0.0;
  }

  bool zero_diagonal_ok() const {
    for (int i = 0; i < n; ++i) {
      if (at(i, i) != 0.0) return false;
    }
    return true;
  }

  bool is_binary() const {
    for (double v : w) {
      if (v != 0.0 && v != 1.0) return false;
    }
    return true;
  }

  int edge_count(double threshold = 0.0) const {
    int e = 0;
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        if (j != k && at(j, k) > threshold) ++e;
      }
    }
    return e;
  }

  Tensor tensor() const { return Tensor({n, n}, w); }

  bool operator==(const AdjacencyMatrix& o) const { return n == o.n && w == o.w; }
};

// Permutation of the factors: order[pos] = factor occupying causal position pos.
struct DenseOrdering {
  std::vector<int> order;

  int n() const { return static_cast<int>(order.size()); }

  bool valid() const {
    std::vector<bool> seen(order.size(), false);
    for (int f : order) {
      if (f < 0 || f >= n() || seen[static_cast<std::size_t>(f)]) return false;
      seen[static_cast<std::size_t>(f)] = true;
    }
    return !order.empty();
  }

  // positions()[factor] = causal position of that factor.
  std::vector<int> positions() const {
    std::vector<int> pos(order.size());
    for (int p = 0; p < n(); ++p) pos[static_cast<std::size_t>(order[p])] = p;
    return pos;
  }

  static DenseOrdering identity(int n) {
    DenseOrdering d;
    d.order.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) d.order[static_cast<std::size_t>(i)] = i;
    return d;
  }

  // e.g. "DVAL" -> depth first, lighting last (n = 4 factor alphabet).
  static DenseOrdering from_label(const std::string& s) {
    DenseOrdering d;
    for (char c : s) {
      auto it = std::find(kFactorLabels.begin(), kFactorLabels.end(), c);
      if (it == kFactorLabels.end()) {
        throw std::invalid_argument("DenseOrdering: unknown factor label '" + std::string(1, c) +
                                    "'");
      }
      d.order.push_back(static_cast<int>(it - kFactorLabels.begin()));
    }
    if (!d.valid() || d.n() != 4) throw std::invalid_argument("DenseOrdering: bad label " + s);
    return d;
  }

  std::string label() const {
    std::string s;
    for (int f : order) {
      s += (n() == 4) ? kFactorLabels[static_cast<std::size_t>(f)]
                      : static_cast<char>('0' + f);
    }
    return s;
  }

  bool operator==(const DenseOrdering& o) const { return order == o.order; }
};

// All-one strictly-upper-triangular matrix after permuting by the ordering:
// edge j -> k iff j precedes k.
inline AdjacencyMatrix ordering_to_mask(const DenseOrdering& pi) {
  if (!pi.valid()) throw std::invalid_argument("ordering_to_mask: invalid permutation");
  AdjacencyMatrix m(pi.n());
  const std::vector<int> pos = pi.positions();
  for (int j = 0; j < m.n; ++j) {
    for (int k = 0; k < m.n; ++k) {
      if (pos[static_cast<std::size_t>(j)] < pos[static_cast<std::size_t>(k)]) m.at(j, k) = 1.0;
    }
  }
  return m;
}

// H(M) = tr((I + (c/n) M∘M)^n) - n. Zero exactly on DAGs, positive otherwise.
inline double acyclicity_penalty(const AdjacencyMatrix& m, double c = 1.0) {
  if (c <= 0.0) throw std::invalid_argument("acyclicity_penalty: c must be positive");
  const int n = m.n;
  std::vector<double> b(static_cast<std::size_t>(n) * n, 0.0);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      b[static_cast<std::size_t>(j) * n + k] = (c / n) * m.at(j, k) * m.at(j, k);
    }
    b[static_cast<std::size_t>(j) * n + j] += 1.0;
  }
  std::vector<double> p = b;
  std::vector<double> tmp(p.size());
  for (int it = 1; it < n; ++it) {
    std::fill(tmp.begin(), tmp.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n; ++k) {
        const double a = p[static_cast<std::size_t>(i) * n + k];
        if (a == 0.0) continue;
        for (int j = 0; j < n; ++j) {
          tmp[static_cast<std::size_t>(i) * n + j] += a * b[static_cast<std::size_t>(k) * n + j];
        }
      }
    }
    p.swap(tmp);
  }
  double tr = 0.0;
  for (int i = 0; i < n; ++i) tr += p[static_cast<std::size_t>(i) * n + i];
  return tr - n;
}

// Differentiable H(M) on the tape; m is an (n x n) Var.
inline Var acyclicity_penalty(Tape& t, Var m, double c = 1.0) {
  if (c <= 0.0) throw std::invalid_argument("acyclicity_penalty: c must be positive");
  const Tensor& vm = t.val(m);
  if (vm.ndim() != 2 || vm.dim(0) != vm.dim(1)) {
    throw std::invalid_argument("acyclicity_penalty: square matrix expected");
  }
  const int n = vm.dim(0);
  Tensor eye({n, n});
  for (int i = 0; i < n; ++i) eye.at(i, i) = 1.0;
  Var b = t.add(t.scale(t.mul(m, m), c / n), t.constant(std::move(eye)));
  Var p = b;
  for (int it = 1; it < n; ++it) p = t.matmul(p, b);
  return t.offset(t.trace(p), -static_cast<double>(n));
}

// Kahn topological sort over edges with weight > threshold. Returns a valid
// topological order when the thresholded graph is a DAG.
inline std::optional<std::vector<int>> is_dag(const AdjacencyMatrix& m, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("is_dag: threshold must be >= 0");
  const int n = m.n;
  std::vector<int> indeg(static_cast<std::size_t>(n), 0);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j != k && m.at(j, k) > threshold) ++indeg[static_cast<std::size_t>(k)];
    }
  }
  std::vector<int> ready, order;
  for (int i = 0; i < n; ++i) {
    if (indeg[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
  }
  while (!ready.empty()) {
    // smallest index first keeps the returned order deterministic
    const auto it = std::min_element(ready.begin(), ready.end());
    const int v = *it;
    ready.erase(it);
    order.push_back(v);
    for (int k = 0; k < n; ++k) {
      if (k != v && m.at(v, k) > threshold) {
        if (--indeg[static_cast<std::size_t>(k)] == 0) ready.push_back(k);
      }
    }
  }
  if (static_cast<int>(order.size()) != n) return std::nullopt;
  return order;
}

// Binary matrices are judged at 0; continuous ones at the binarization
// threshold from the training recipe.
inline double default_dag_threshold(const AdjacencyMatrix& m) {
  return m.is_binary() ? 0.0 : 0.01;
}

inline std::optional<std::vector<int>> is_dag(const AdjacencyMatrix& m) {
  return is_dag(m, default_dag_threshold(m));
}

inline AdjacencyMatrix binarize(const AdjacencyMatrix& m, double tau = 0.01) {
  if (tau < 0.0) throw std::invalid_argument("binarize: tau must be >= 0");
  AdjacencyMatrix out(m.n);
  for (int j = 0; j < m.n; ++j) {
    for (int k = 0; k < m.n; ++k) out.at(j, k) = m.at(j, k) > tau ? 1.0 : 0.0;
  }
  out.zero_diagonal();
  return out;
}

// Lexicographic enumeration of all n! orderings (n <= 8).
inline std::vector<DenseOrdering> all_orderings(int n) {
  if (n < 1 || n > 8) throw std::invalid_argument("all_orderings: n out of range");
  std::vector<DenseOrdering> out;
  DenseOrdering d = DenseOrdering::identity(n);
  do {
    out.push_back(d);
  } while (std::next_permutation(d.order.begin(), d.order.end()));
  return out;
}

// Number of discordant pairs between two orderings.
inline int kendall_tau(const DenseOrdering& a, const DenseOrdering& b) {
  if (a.n() != b.n()) throw std::invalid_argument("kendall_tau: size mismatch");
  const std::vector<int> pa = a.positions(), pb = b.positions();
  int d = 0;
  for (int i = 0; i < a.n(); ++i) {
    for (int j = i + 1; j < a.n(); ++j) {
      const bool ca = pa[static_cast<std::size_t>(i)] < pa[static_cast<std::size_t>(j)];
      const bool cb = pb[static_cast<std::size_t>(i)] < pb[static_cast<std::size_t>(j)];
      if (ca != cb) ++d;
    }
  }
  return d;
}

// ---- structured-text serialization ----

inline void save_adjacency(std::ostream& os, const AdjacencyMatrix& m) {
  os << "scrlab-adj v1\nn " << m.n << "\nlabels";
  for (int i = 0; i < m.n; ++i) {
    os << ' ' << (m.n == 4 ? std::string(1, kFactorLabels[static_cast<std::size_t>(i)])
                           : "F" + std::to_string(i));
  }
  os << "\n";
  for (int j = 0; j < m.n; ++j) {
    os << "row";
    for (int k = 0; k < m.n; ++k) os << ' ' << double_to_hex(m.at(j, k));
    os << "\n";
  }
}

inline AdjacencyMatrix load_adjacency(std::istream& is) {
  std::string header;
  std::getline(is, header);
  if (header != "scrlab-adj v1") throw std::runtime_error("bad adjacency header: " + header);
  std::string kw;
  int n = 0;
  is >> kw >> n;
  if (kw != "n" || n < 1) throw std::runtime_error("bad adjacency size");
  is >> kw;
  if (kw != "labels") throw std::runtime_error("bad adjacency labels");
  for (int i = 0; i < n; ++i) is >> kw;
  AdjacencyMatrix m(n);
  for (int j = 0; j < n; ++j) {
    is >> kw;
    if (kw != "row") throw std::runtime_error("bad adjacency row");
    for (int k = 0; k < n; ++k) {
      std::string tok;
      is >> tok;
      m.at(j, k) = hex_to_double(tok);
    }
  }
  if (!is) throw std::runtime_error("truncated adjacency");
  return m;
}

inline std::string adjacency_to_string(const AdjacencyMatrix& m) {
  std::ostringstream os;
  save_adjacency(os, m);
  return os.str();
}

}  // namespace scr
