#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scr/tensor.hpp"

namespace scr {

// Handle into a Tape. Valid only for the tape that produced it, until reset().
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over Tensor values. Nodes are appended in topological
// order by construction, so backward() is a single reverse sweep.
// Single-threaded per instance.
class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad = false) {
    return push(std::move(value), requires_grad, nullptr);
  }

  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var constant_scalar(double v) { return leaf(Tensor::scalar(v), false); }

  const Tensor& val(Var v) const { return node(v).value; }

  // Valid after backward(); zero tensor for nodes the loss does not reach.
  const Tensor& grad(Var v) const {
    const NodeT& n = node(v);
    if (n.grad.numel() == 0) {
      throw std::logic_error("Tape::grad before backward()");
    }
    return n.grad;
  }

  bool has_grad(Var v) const { return node(v).grad.numel() > 0; }

  std::size_t size() const { return nodes_.size(); }

  void reset() { nodes_.clear(); }

  // ---- elementwise binary ----

  Var add(Var a, Var b) {
    check_same_shape(a, b, "add");
    Tensor out = val(a);
    const Tensor& tb = val(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += tb[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, int o) {
      const Tensor& g = t.nodes_[o].grad;
      t.accum(a, [&](std::size_t i) { return g[i]; });
      t.accum(b, [&](std::size_t i) { return g[i]; });
    });
  }

  Var sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    Tensor out = val(a);
    const Tensor& tb = val(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= tb[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, int o) {
      const Tensor& g = t.nodes_[o].grad;
      t.accum(a, [&](std::size_t i) { return g[i]; });
      t.accum(b, [&](std::size_t i) { return -g[i]; });
    });
  }

  Var mul(Var a, Var b) {
    check_same_shape(a, b, "mul");
    Tensor out = val(a);
    const Tensor& tb = val(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= tb[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, int o) {
      const Tensor& g = t.nodes_[o].grad;
      const Tensor& va = t.val(a);
      const Tensor& vb = t.val(b);
      t.accum(a, [&](std::size_t i) { return g[i] * vb[i]; });
      t.accum(b, [&](std::size_t i) { return g[i] * va[i]; });
    });
  }

  Var div(Var a, Var b) {
    check_same_shape(a, b, "div");
    Tensor out = val(a);
    const Tensor& tb = val(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] /= tb[i];
    return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, int o) {
      const Tensor& g = t.nodes_[o].grad;
      const Tensor& va = t.val(a);
      const Tensor& vb = t.val(b);
      t.accum(a, [&](std::size_t i) { return g[i] / vb[i]; });
      t.accum(b, [&](std::size_t i) { return -g[i] * va[i] / (vb[i] * vb[i]); });
    });
  }

  // ---- scalar broadcast (s is a 1-element Var) ----

  Var add_scalar(Var t, Var s) {
    check_scalar(s, "add_scalar");
    Tensor out = val(t);
    const double sv = val(s)[0];
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += sv;
    return push(std::move(out), needs(t) || needs(s), [t, s](Tape& tp, int o) {
      const Tensor& g = tp.nodes_[o].grad;
      tp.accum(t, [&](std::size_t i) { return g[i]; });
      if (tp.needs(s)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < g.numel(); ++i) acc += g[i];
        tp.gradref(s)[0] += acc;
      }
    });
  }

  Var mul_scalar(Var t, Var s) {
    check_scalar(s, "mul_scalar");
    Tensor out = val(t);
    const double sv = val(s)[0];
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= sv;
    return push(std::move(out), needs(t) || needs(s), [t, s](Tape& tp, int o) {
      const Tensor& g = tp.nodes_[o].grad;
      const double sv = tp.val(s)[0];
      const Tensor& vt = tp.val(t);
      tp.accum(t, [&](std::size_t i) { return g[i] * sv; });
      if (tp.needs(s)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < g.numel(); ++i) acc += g[i] * vt[i];
        tp.gradref(s)[0] += acc;
      }
    });
  }

  // ---- constant scalar ----

  Var scale(Var t, double c) {
    Tensor out = val(t);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= c;
    return push(std::move(out), needs(t), [t, c](Tape& tp, int o) {
      const Tensor& g = tp.nodes_[o].grad;
      tp.accum(t, [&](std::size_t i) { return g[i] * c; });
    });
  }

  Var offset(Var t, double c) {
    Tensor out = val(t);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += c;
    return push(std::move(out), needs(t), [t](Tape& tp, int o) {
      const Tensor& g = tp.nodes_[o].grad;
      tp.accum(t, [&](std::size_t i) { return g[i]; });
    });
  }

  Var neg(Var t) { return scale(t, -1.0); }

  // ---- unary elementwise ----

  Var relu(Var t) {
    // derivative at exactly 0 is 0
    return unary(
        t, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
  }

  Var tanh_(Var t) {
    return unary(
        t, [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
  }

  Var sigmoid(Var t) {
    return unary(
        t, [](double x) { return sigmoid_v(x); },
        [](double, double y) { return y * (1.0 - y); });
  }

  Var softplus(Var t) {
    return unary(
        t, [](double x) { return softplus_v(x); },
        [](double x, double) { return sigmoid_v(x); });
  }

  Var exp_(Var t) {
    return unary(
        t, [](double x) { return std::exp(x); },
        [](double, double y) { return y; });
  }

  Var log_(Var t) {
    return unary(
        t, [](double x) { return std::log(x); },
        [](double x, double) { return 1.0 / x; });
  }

  Var sqrt_(Var t) {
    return unary(
        t, [](double x) { return std::sqrt(x); },
        [](double, double y) { return 0.5 / y; });
  }

  Var abs_(Var t) {
    // subgradient 0 at the kink
    return unary(
        t, [](double x) { return std::fabs(x); },
        [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
  }

  Var clamp01(Var t) {
    return unary(
        t, [](double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); },
        [](double x, double) { return (x > 0.0 && x < 1.0) ? 1.0 : 0.0; });
  }

  // ---- reductions ----

  Var sum(Var t) {
    double acc = 0.0;
    const Tensor& vt = val(t);
    for (std::size_t i = 0; i < vt.numel(); ++i) acc += vt[i];
    return push(Tensor::scalar(acc), needs(t), [t](Tape& tp, int o) {
      const double g = tp.nodes_[o].grad[0];
      tp.accum(t, [&](std::size_t) { return g; });
    });
  }

  Var mean(Var t) {
    const double inv = 1.0 / static_cast<double>(val(t).numel());
    return scale(sum(t), inv);
  }

  Var trace(Var t) {
    const Tensor& vt = val(t);
    check2d(t, "trace");
    if (vt.dim(0) != vt.dim(1)) throw std::invalid_argument("trace: non-square");
    const int n = vt.dim(0);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += vt.at(i, i);
    return push(Tensor::scalar(acc), needs(t), [t, n](Tape& tp, int o) {
      const double g = tp.nodes_[o].grad[0];
      if (!tp.needs(t)) return;
      Tensor& gt = tp.gradref(t);
      for (int i = 0; i < n; ++i) gt[static_cast<std::size_t>(i) * n + i] += g;
    });
  }

  // ---- shape ops ----

  Var reshape(Var t, std::vector<int> shape) {
    Tensor out(std::move(shape), val(t).data());
    if (out.numel() != val(t).numel()) {
      throw std::invalid_argument("reshape: numel mismatch");
    }
    return push(std::move(out), needs(t), [t](Tape& tp, int o) {
      const Tensor& g = tp.nodes_[o].grad;
      tp.accum(t, [&](std::size_t i) { return g[i]; });
    });
  }

  // Flat slice [offset, offset+len) as a 1-D tensor.
  Var slice(Var t, int offset, int len) {
    const Tensor& vt = val(t);
    if (offset < 0 || len <= 0 ||
        static_cast<std::size_t>(offset) + static_cast<std::size_t>(len) > vt.numel()) {
      throw std::invalid_argument("slice: out of range");
    }
    Tensor out({len});
    for (int i = 0; i < len; ++i) out[i] = vt[offset + i];
    return push(std::move(out), needs(t), [t, offset, len](Tape& tp, int o) {
      const Tensor& g = tp.nodes_[o].grad;
      if (!tp.needs(t)) return;
      Tensor& gt = tp.gradref(t);
      for (int i = 0; i < len; ++i) gt[offset + i] += g[i];
    });
  }

  // Row r of a 2-D tensor, as 1-D.
  Var row(Var t, int r) {
    check2d(t, "row");
    const int cols = val(t).dim(1);
    return slice(t, r * cols, cols);
  }

  // ---- linear algebra ----

  Var matmul(Var a, Var b) {
    check2d(a, "matmul lhs");
    check2d(b, "matmul rhs");
    const Tensor& va = val(a);
    const Tensor& vb = val(b);
    const int p = va.dim(0), q = va.dim(1), r = vb.dim(1);
    if (vb.dim(0) != q) {
      throw std::invalid_argument("matmul: inner dims " + va.shape_str() + " vs " +
                                  vb.shape_str());
    }
    Tensor out({p, r});
    matmul_into(out.data(), va.data(), vb.data(), p, q, r, false, false);
    return push(std::move(out), needs(a) || needs(b), [a, b, p, q, r](Tape& tp, int o) {
      const Tensor& g = tp.nodes_[o].grad;
      if (tp.needs(a)) {
        // dA = g @ B^T
        matmul_into(tp.gradref(a).data(), g.data(), tp.val(b).data(), p, r, q, false, true);
      }
      if (tp.needs(b)) {
        // dB = A^T @ g
        matmul_into(tp.gradref(b).data(), tp.val(a).data(), g.data(), q, p, r, true, false);
      }
    });
  }

  // mat (B x n) + v (n) broadcast over rows.
  Var add_rowvec(Var mat, Var v) {
    check2d(mat, "add_rowvec");
    const Tensor& vm = val(mat);
    const Tensor& vv = val(v);
    const int rows = vm.dim(0), cols = vm.dim(1);
    if (static_cast<int>(vv.numel()) != cols) {
      throw std::invalid_argument("add_rowvec: width mismatch");
    }
    Tensor out = vm;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) out[static_cast<std::size_t>(r) * cols + c] += vv[c];
    }
    return push(std::move(out), needs(mat) || needs(v), [mat, v, rows, cols](Tape& tp, int o) {
      const Tensor& g = tp.nodes_[o].grad;
      tp.accum(mat, [&](std::size_t i) { return g[i]; });
      if (tp.needs(v)) {
        Tensor& gv = tp.gradref(v);
        for (int r = 0; r < rows; ++r) {
          for (int c = 0; c < cols; ++c) gv[c] += g[static_cast<std::size_t>(r) * cols + c];
        }
      }
    });
  }

  // mat (B x n) * v (n) broadcast over rows.
  Var mul_rowvec(Var mat, Var v) {
    check2d(mat, "mul_rowvec");
    const Tensor& vm = val(mat);
    const Tensor& vv = val(v);
    const int rows = vm.dim(0), cols = vm.dim(1);
    if (static_cast<int>(vv.numel()) != cols) {
      throw std::invalid_argument("mul_rowvec: width mismatch");
    }
    Tensor out = vm;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) out[static_cast<std::size_t>(r) * cols + c] *= vv[c];
    }
    return push(std::move(out), needs(mat) || needs(v), [mat, v, rows, cols](Tape& tp, int o) {
      const Tensor& g = tp.nodes_[o].grad;
      const Tensor& vm = tp.val(mat);
      const Tensor& vv = tp.val(v);
      if (tp.needs(mat)) {
        Tensor& gm = tp.gradref(mat);
        for (int r = 0; r < rows; ++r) {
          for (int c = 0; c < cols; ++c) {
            gm[static_cast<std::size_t>(r) * cols + c] +=
                g[static_cast<std::size_t>(r) * cols + c] * vv[c];
          }
        }
      }
      if (tp.needs(v)) {
        Tensor& gv = tp.gradref(v);
        for (int r = 0; r < rows; ++r) {
          for (int c = 0; c < cols; ++c) {
            gv[c] += g[static_cast<std::size_t>(r) * cols + c] *
                     vm[static_cast<std::size_t>(r) * cols + c];
          }
        }
      }
    });
  }

  // ---- grid ops (2-D fields) ----

  // Central difference along columns (x). Indices clamped at the border.
  Var stencil_dx(Var t) { return stencil(t, /*along_rows=*/false); }
  // Central difference along rows (y).
  Var stencil_dy(Var t) { return stencil(t, /*along_rows=*/true); }

  // Horizontal mirror (reverse columns).
  Var mirror_x(Var t) {
    check2d(t, "mirror_x");
    const Tensor& vt = val(t);
    const int rows = vt.dim(0), cols = vt.dim(1);
    Tensor out({rows, cols});
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) out.at(r, c) = vt.at(r, cols - 1 - c);
    }
    return push(std::move(out), needs(t), [t, rows, cols](Tape& tp, int o) {
      const Tensor& g = tp.nodes_[o].grad;
      if (!tp.needs(t)) return;
      Tensor& gt = tp.gradref(t);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          gt[static_cast<std::size_t>(r) * cols + (cols - 1 - c)] +=
              g[static_cast<std::size_t>(r) * cols + c];
        }
      }
    });
  }

  // Translate grid content by shift = (sx, sy) pixels, bilinear sampling with
  // clamp-to-edge. out(r,c) = in(r - sy, c - sx).
  Var bilinear_translate(Var grid, Var shift) {
    check2d(grid, "bilinear_translate");
    if (val(shift).numel() != 2) {
      throw std::invalid_argument("bilinear_translate: shift must have 2 entries");
    }
    const Tensor& in = val(grid);
    const int rows = in.dim(0), cols = in.dim(1);
    const double sx = val(shift)[0], sy = val(shift)[1];
    Tensor out({rows, cols});
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        out.at(r, c) = bilinear_sample(in, rows, cols, r - sy, c - sx);
      }
    }
    return push(std::move(out), needs(grid) || needs(shift),
                [grid, shift, rows, cols](Tape& tp, int o) {
                  tp.bilinear_backward(grid, shift, rows, cols, o);
                });
  }

  // ---- backward ----

  void backward(Var loss) {
    const NodeT& ln = node(loss);
    if (!ln.value.is_scalar()) {
      throw std::invalid_argument("backward: loss must be scalar, got " + ln.value.shape_str());
    }
    for (int i = 0; i <= loss.id; ++i) {
      NodeT& n = nodes_[static_cast<std::size_t>(i)];
      if (n.needs_grad) {
        n.grad = Tensor::zeros_like(n.value);
      }
    }
    if (!ln.needs_grad) return;  // nothing depends on parameters
    nodes_[static_cast<std::size_t>(loss.id)].grad[0] = 1.0;
    for (int i = loss.id; i >= 0; --i) {
      NodeT& n = nodes_[static_cast<std::size_t>(i)];
      if (n.needs_grad && n.back) n.back(*this, i);
    }
  }

  bool needs(Var v) const { return node(v).needs_grad; }

 private:
  struct NodeT {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&, int)> back;
    bool needs_grad = false;
  };

  static double sigmoid_v(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  }

  static double softplus_v(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }

  template <typename F, typename DF>
  Var unary(Var t, F f, DF df) {
    Tensor out = val(t);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = f(out[i]);
    return push(std::move(out), needs(t), [t, df](Tape& tp, int o) {
      const Tensor& g = tp.nodes_[o].grad;
      const Tensor& x = tp.val(t);
      const Tensor& y = tp.nodes_[o].value;
      tp.accum(t, [&](std::size_t i) { return g[i] * df(x[i], y[i]); });
    });
  }

  Var stencil(Var t, bool along_rows) {
    check2d(t, "stencil");
    const Tensor& vt = val(t);
    const int rows = vt.dim(0), cols = vt.dim(1);
    Tensor out({rows, cols});
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        int hi, lo;
        if (along_rows) {
          hi = std::min(r + 1, rows - 1) * cols + c;
          lo = std::max(r - 1, 0) * cols + c;
        } else {
          hi = r * cols + std::min(c + 1, cols - 1);
          lo = r * cols + std::max(c - 1, 0);
        }
        out.at(r, c) = 0.5 * (vt[hi] - vt[lo]);
      }
    }
    return push(std::move(out), needs(t), [t, rows, cols, along_rows](Tape& tp, int o) {
      const Tensor& g = tp.nodes_[o].grad;
      if (!tp.needs(t)) return;
      Tensor& gt = tp.gradref(t);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          int hi, lo;
          if (along_rows) {
            hi = std::min(r + 1, rows - 1) * cols + c;
            lo = std::max(r - 1, 0) * cols + c;
          } else {
            hi = r * cols + std::min(c + 1, cols - 1);
            lo = r * cols + std::max(c - 1, 0);
          }
          const double gv = 0.5 * g[static_cast<std::size_t>(r) * cols + c];
          gt[hi] += gv;
          gt[lo] -= gv;
        }
      }
    });
  }

  static double bilinear_sample(const Tensor& in, int rows, int cols, double rs, double cs) {
    rs = std::clamp(rs, 0.0, static_cast<double>(rows - 1));
    cs = std::clamp(cs, 0.0, static_cast<double>(cols - 1));
    const int r0 = static_cast<int>(std::floor(rs));
    const int c0 = static_cast<int>(std::floor(cs));
    const int r1 = std::min(r0 + 1, rows - 1);
    const int c1 = std::min(c0 + 1, cols - 1);
    const double fr = rs - r0, fc = cs - c0;
    return (1 - fr) * (1 - fc) * in.at(r0, c0) + (1 - fr) * fc * in.at(r0, c1) +
           fr * (1 - fc) * in.at(r1, c0) + fr * fc * in.at(r1, c1);
  }

  void bilinear_backward(Var grid, Var shift, int rows, int cols, int out_id) {
    const Tensor& g = nodes_[static_cast<std::size_t>(out_id)].grad;
    const Tensor& in = val(grid);
    const double sx = val(shift)[0], sy = val(shift)[1];
    Tensor* gin = needs(grid) ? &gradref(grid) : nullptr;
    Tensor* gsh = needs(shift) ? &gradref(shift) : nullptr;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double gv = g[static_cast<std::size_t>(r) * cols + c];
        if (gv == 0.0) continue;
        double rs = r - sy, cs = c - sx;
        const bool r_in = rs > 0.0 && rs < rows - 1;
        const bool c_in = cs > 0.0 && cs < cols - 1;
        rs = std::clamp(rs, 0.0, static_cast<double>(rows - 1));
        cs = std::clamp(cs, 0.0, static_cast<double>(cols - 1));
        const int r0 = static_cast<int>(std::floor(rs));
        const int c0 = static_cast<int>(std::floor(cs));
        const int r1 = std::min(r0 + 1, rows - 1);
        const int c1 = std::min(c0 + 1, cols - 1);
        const double fr = rs - r0, fc = cs - c0;
        if (gin) {
          Tensor& gi = *gin;
          gi[static_cast<std::size_t>(r0) * cols + c0] += gv * (1 - fr) * (1 - fc);
          gi[static_cast<std::size_t>(r0) * cols + c1] += gv * (1 - fr) * fc;
          gi[static_cast<std::size_t>(r1) * cols + c0] += gv * fr * (1 - fc);
          gi[static_cast<std::size_t>(r1) * cols + c1] += gv * fr * fc;
        }
        if (gsh) {
          const double dv_drs =
              r_in ? (1 - fc) * (in.at(r1, c0) - in.at(r0, c0)) + fc * (in.at(r1, c1) - in.at(r0, c1))
                   : 0.0;
          const double dv_dcs =
              c_in ? (1 - fr) * (in.at(r0, c1) - in.at(r0, c0)) + fr * (in.at(r1, c1) - in.at(r1, c0))
                   : 0.0;
          (*gsh)[0] += gv * (-dv_dcs);
          (*gsh)[1] += gv * (-dv_drs);
        }
      }
    }
  }

  static void matmul_into(std::vector<double>& out, const std::vector<double>& a,
                          const std::vector<double>& b, int p, int q, int r, bool ta, bool tb) {
    // out (p x r) += op(a) @ op(b); op transposes when ta/tb set. `out` must be
    // pre-sized; matmul() allocates fresh, backward accumulates into grads.
    auto A = [&](int i, int k) { return ta ? a[static_cast<std::size_t>(k) * p + i] : a[static_cast<std::size_t>(i) * q + k]; };
    auto B = [&](int k, int j) { return tb ? b[static_cast<std::size_t>(j) * q + k] : b[static_cast<std::size_t>(k) * r + j]; };
    for (int i = 0; i < p; ++i) {
      for (int k = 0; k < q; ++k) {
        const double av = A(i, k);
        if (av == 0.0) continue;
        double* orow = out.data() + static_cast<std::size_t>(i) * r;
        for (int j = 0; j < r; ++j) orow[j] += av * B(k, j);
      }
    }
  }

  template <typename F>
  void accum(Var parent, F contribution) {
    if (!needs(parent)) return;
    Tensor& g = gradref(parent);
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] += contribution(i);
  }

  Tensor& gradref(Var v) { return nodes_[static_cast<std::size_t>(v.id)].grad; }

  const NodeT& node(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
      throw std::logic_error("Tape: invalid Var");
    }
    return nodes_[static_cast<std::size_t>(v.id)];
  }

  void check_same_shape(Var a, Var b, const char* op) const {
    if (!val(a).same_shape(val(b))) {
      throw std::invalid_argument(std::string(op) + ": shape mismatch " + val(a).shape_str() +
                                  " vs " + val(b).shape_str());
    }
  }

  void check_scalar(Var s, const char* op) const {
    if (!val(s).is_scalar()) {
      throw std::invalid_argument(std::string(op) + ": expected scalar");
    }
  }

  void check2d(Var t, const char* op) const {
    if (val(t).ndim() != 2) {
      throw std::invalid_argument(std::string(op) + ": expected 2-D, got " + val(t).shape_str());
    }
  }

  Var push(Tensor value, bool needs_grad, std::function<void(Tape&, int)> back) {
    NodeT n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.back = needs_grad ? std::move(back) : nullptr;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<NodeT> nodes_;
};

}  // namespace scr
