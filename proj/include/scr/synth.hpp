#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scr/dag.hpp"
#include "scr/nn.hpp"
#include "scr/render.hpp"
#include "scr/rng.hpp"

namespace scr {

// ---- ground-truth structural causal model over (V, D, L, A) ----

// Per-factor latent parameter counts: V = (sx, sy); D/A = 5 pattern
// coefficients; L = (tilt_x, tilt_y, ambient).
inline constexpr std::array<int, 4> kScmParamDims = {2, 5, 3, 5};
inline constexpr int kScmMaxParams = 5;

inline AdjacencyMatrix default_gt_dag() {
  AdjacencyMatrix m(4);
  m.at(kFactorD, kFactorL) = 1.0;
  m.at(kFactorV, kFactorL) = 1.0;
  m.at(kFactorD, kFactorA) = 1.0;
  return m;
}

struct ScmConfig {
  int grid = 16;
  std::uint64_t scm_seed = 7;  // draws the structural polynomial coefficients
  double symmetry = 1.0;       // 1 -> D and A exactly mirror-symmetric
  double coupling_scale = 1.0;
  AdjacencyMatrix gt_dag = default_gt_dag();
};

struct SceneSample {
  FactorSet latents;
  Tensor image;
};

// Ancestral sampler: exogenous draws per factor, then order-2 polynomial
// couplings along the ground-truth DAG, then closed-form grid synthesis and a
// render through the shared toy renderer.
class GroundTruthScm {
 public:
  explicit GroundTruthScm(const ScmConfig& cfg) : cfg_(cfg) {
    if (cfg_.gt_dag.n != 4) throw std::invalid_argument("GroundTruthScm: dag must be 4x4");
    if (!cfg_.gt_dag.zero_diagonal_ok()) {
      throw std::invalid_argument("GroundTruthScm: dag diagonal must be zero");
    }
    auto topo = is_dag(cfg_.gt_dag, 0.0);
    if (!topo) throw std::invalid_argument("GroundTruthScm: gt graph has a cycle");
    topo_ = *topo;
    if (cfg_.symmetry < 0.0 || cfg_.symmetry > 1.0) {
      throw std::invalid_argument("GroundTruthScm: symmetry must lie in [0,1]");
    }
    // structural coefficients drawn once per SCM seed in [-0.5, 0.5]
    Rng rng = derive_rng(cfg_.scm_seed, "scm-couplings");
    for (int j = 0; j < 4; ++j) {
      for (int k = 0; k < 4; ++k) {
        for (int c = 0; c < kScmMaxParams; ++c) {
          lin_[idx(j, k, c)] = rng.uniform(-0.5, 0.5);
          quad_[idx(j, k, c)] = rng.uniform(-0.5, 0.5);
        }
      }
    }
  }

  const ScmConfig& config() const { return cfg_; }
  const AdjacencyMatrix& gt_dag() const { return cfg_.gt_dag; }
  const std::vector<int>& topological_order() const { return topo_; }

  // Overrides one edge's coupling polynomial (tests pin exact couplings).
  void set_coupling(int j, int k, int component, double linear, double quadratic) {
    lin_[idx(j, k, component)] = linear;
    quad_[idx(j, k, component)] = quadratic;
  }

  // do-operator: fixes one factor's parameters before couplings propagate.
  // Exogenous draws still happen for every factor, so paired seeds stay
  // aligned with the non-intervened model.
  void intervene(int factor, std::vector<double> values) {
    if (factor < 0 || factor > 3 ||
        static_cast<int>(values.size()) != kScmParamDims[static_cast<std::size_t>(factor)]) {
      throw std::invalid_argument("intervene: bad factor or value count");
    }
    do_factor_ = factor;
    do_values_ = std::move(values);
  }

  SceneSample sample(std::uint64_t sample_seed) const {
    Rng rng(sample_seed);
    std::array<std::vector<double>, 4> z;
    z[kFactorV] = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
    z[kFactorD].resize(5);
    for (double& v : z[kFactorD]) v = rng.uniform(-1.0, 1.0);
    z[kFactorL] = {rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7), rng.uniform(0.15, 0.45)};
    z[kFactorA].resize(5);
    for (double& v : z[kFactorA]) v = rng.uniform(-1.0, 1.0);
    if (do_factor_ >= 0) z[static_cast<std::size_t>(do_factor_)] = do_values_;

    for (int k : topo_) {
      if (k == do_factor_) continue;  // fixed by the intervention
      for (int j = 0; j < 4; ++j) {
        if (j == k || cfg_.gt_dag.at(j, k) <= 0.0) continue;
        const double s = summary(j, z[static_cast<std::size_t>(j)]);
        for (std::size_t c = 0; c < z[static_cast<std::size_t>(k)].size(); ++c) {
          z[static_cast<std::size_t>(k)][c] +=
              cfg_.coupling_scale *
              (lin_[idx(j, k, static_cast<int>(c))] * s +
               quad_[idx(j, k, static_cast<int>(c))] * s * s);
        }
      }
      clamp_factor(k, z[static_cast<std::size_t>(k)]);
    }

    SceneSample out;
    out.latents.view = Tensor({2}, {z[kFactorV][0], z[kFactorV][1]});
    out.latents.light = Tensor({4}, {z[kFactorL][0], z[kFactorL][1], 1.0, z[kFactorL][2]});
    out.latents.depth = symmetrize(pattern_grid(z[kFactorD], 1.5, 0.8));
    out.latents.albedo = symmetrize(pattern_grid(z[kFactorA], 0.5, 0.35));
    out.image = render_plain(out.latents);
    return out;
  }

 private:
  static std::size_t idx(int j, int k, int c) {
    return (static_cast<std::size_t>(j) * 4 + static_cast<std::size_t>(k)) * kScmMaxParams +
           static_cast<std::size_t>(c);
  }

  // Scalar summary of a factor's parameters, roughly in [-1, 1].
  static double summary(int factor, const std::vector<double>& z) {
    double s = 0.0;
    switch (factor) {
      case kFactorV: s = (z[0] + z[1]) / (2.0 * 1.5); break;
      case kFactorD:
      case kFactorA: {
        for (double v : z) s += v;
        s /= static_cast<double>(z.size());
        break;
      }
      case kFactorL: s = (z[0] / 0.7 + z[1] / 0.7 + (z[2] - 0.3) / 0.15) / 3.0; break;
    }
    return std::clamp(s, -1.0, 1.0);
  }

  static void clamp_factor(int factor, std::vector<double>& z) {
    switch (factor) {
      case kFactorV:
        for (double& v : z) v = std::clamp(v, -2.0, 2.0);
        break;
      case kFactorD:
      case kFactorA:
        for (double& v : z) v = std::clamp(v, -1.3, 1.3);
        break;
      case kFactorL:
        z[0] = std::clamp(z[0], -1.0, 1.0);
        z[1] = std::clamp(z[1], -1.0, 1.0);
        z[2] = std::clamp(z[2], 0.05, 0.6);
        break;
    }
  }

  // base + span * (normalized 5-coefficient trig pattern in [-1, 1])
  Tensor pattern_grid(const std::vector<double>& z, double base, double span) const {
    const int g = cfg_.grid;
    const double pi = 3.1415926535897932384626433832795;
    double norm = 1e-9;
    for (double v : z) norm += std::fabs(v);
    Tensor out({g, g});
    for (int r = 0; r < g; ++r) {
      const double y = -1.0 + 2.0 * r / (g - 1);
      for (int c = 0; c < g; ++c) {
        const double x = -1.0 + 2.0 * c / (g - 1);
        const double p = z[0] * std::cos(pi * x) + z[1] * std::sin(pi * y) +
                         z[2] * std::cos(pi * x) * std::sin(pi * y) + z[3] * std::sin(pi * x) +
                         z[4] * std::sin(pi * x) * std::sin(pi * y);
        out.at(r, c) = base + span * (p / norm);
      }
    }
    return out;
  }

  // Blends a grid with its horizontal mirror average. At symmetry 1 the result
  // is the mirror average itself, which is bitwise mirror-symmetric.
  Tensor symmetrize(Tensor f) const {
    const double s = cfg_.symmetry;
    if (s == 0.0) return f;
    const int g = cfg_.grid;
    Tensor out({g, g});
    for (int r = 0; r < g; ++r) {
      for (int c = 0; c < g; ++c) {
        const double avg = 0.5 * (f.at(r, c) + f.at(r, g - 1 - c));
        out.at(r, c) = (s == 1.0) ? avg : (1.0 - s) * f.at(r, c) + s * avg;
      }
    }
    return out;
  }

  ScmConfig cfg_;
  std::vector<int> topo_;
  std::array<double, 4 * 4 * kScmMaxParams> lin_{};
  std::array<double, 4 * 4 * kScmMaxParams> quad_{};
  int do_factor_ = -1;
  std::vector<double> do_values_;
};

inline SceneSample sample_scene(const GroundTruthScm& scm, std::uint64_t seed) {
  return scm.sample(seed);
}

// ---- corpus, splits, dataset file ----

struct Corpus {
  ScmConfig scm;
  std::uint64_t dataset_seed = 0;
  std::vector<SceneSample> samples;
};

inline Corpus generate_corpus(const ScmConfig& cfg, int count, std::uint64_t dataset_seed) {
  if (count <= 0) throw std::invalid_argument("generate_corpus: count must be positive");
  GroundTruthScm scm(cfg);
  Corpus corpus;
  corpus.scm = cfg;
  corpus.dataset_seed = dataset_seed;
  corpus.samples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    corpus.samples.push_back(
        scm.sample(derive_seed(dataset_seed, "sample:" + std::to_string(i))));
  }
  return corpus;
}

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct Splits {
  std::vector<int> train, val, test;
};

inline Splits make_splits(int count, const SplitRatios& r, std::uint64_t seed) {
  if (r.train < 0.0 || r.val < 0.0 || r.test < 0.0 ||
      std::fabs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw std::invalid_argument("make_splits: ratios must be non-negative and sum to 1");
  }
  const int n_train = static_cast<int>(count * r.train);
  const int n_val = static_cast<int>(count * r.val);
  const int n_test = count - n_train - n_val;
  if (n_train <= 0 || n_val <= 0 || n_test <= 0) {
    throw std::invalid_argument("make_splits: every split must be non-empty");
  }
  std::vector<int> order(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng = derive_rng(seed, "split");
  rng.shuffle(order);
  Splits s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.end());
  return s;
}

namespace detail {
inline void write_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}
inline void write_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}
inline void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<std::uint64_t>(v)); }
inline std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
inline std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}
inline double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }
inline void write_block(std::ostream& os, const Tensor& t) {
  for (std::size_t i = 0; i < t.numel(); ++i) write_f64(os, t[i]);
}
inline void read_block(std::istream& is, Tensor& t) {
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = read_f64(is);
}
}  // namespace detail

// Little-endian binary dataset:
//   "SCRDATA1" | u32 grid | u64 scm_seed | f64 symmetry | f64 coupling_scale
//   | u64 dataset_seed | u32 n_factors(=4) | 16 x f64 gt_dag (row-major)
//   | u64 n_samples | per sample: view(2) depth(G^2) light(4) albedo(G^2)
//   image(G^2), all f64.
inline void save_corpus(std::ostream& os, const Corpus& corpus) {
  os.write("SCRDATA1", 8);
  detail::write_u32(os, static_cast<std::uint32_t>(corpus.scm.grid));
  detail::write_u64(os, corpus.scm.scm_seed);
  detail::write_f64(os, corpus.scm.symmetry);
  detail::write_f64(os, corpus.scm.coupling_scale);
  detail::write_u64(os, corpus.dataset_seed);
  detail::write_u32(os, 4);
  for (double v : corpus.scm.gt_dag.w) detail::write_f64(os, v);
  detail::write_u64(os, corpus.samples.size());
  for (const SceneSample& s : corpus.samples) {
    detail::write_block(os, s.latents.view);
    detail::write_block(os, s.latents.depth);
    detail::write_block(os, s.latents.light);
    detail::write_block(os, s.latents.albedo);
    detail::write_block(os, s.image);
  }
}

inline Corpus load_corpus(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != "SCRDATA1") {
    throw std::runtime_error("load_corpus: bad magic");
  }
  Corpus corpus;
  corpus.scm.grid = static_cast<int>(detail::read_u32(is));
  corpus.scm.scm_seed = detail::read_u64(is);
  corpus.scm.symmetry = detail::read_f64(is);
  corpus.scm.coupling_scale = detail::read_f64(is);
  corpus.dataset_seed = detail::read_u64(is);
  const std::uint32_t nf = detail::read_u32(is);
  if (nf != 4) throw std::runtime_error("load_corpus: unsupported factor count");
  corpus.scm.gt_dag = AdjacencyMatrix(4);
  for (double& v : corpus.scm.gt_dag.w) v = detail::read_f64(is);
  const std::uint64_t n = detail::read_u64(is);
  const int g = corpus.scm.grid;
  corpus.samples.resize(n);
  for (SceneSample& s : corpus.samples) {
    s.latents.view = Tensor({2});
    s.latents.depth = Tensor({g, g});
    s.latents.light = Tensor({4});
    s.latents.albedo = Tensor({g, g});
    s.image = Tensor({g, g});
    detail::read_block(is, s.latents.view);
    detail::read_block(is, s.latents.depth);
    detail::read_block(is, s.latents.light);
    detail::read_block(is, s.latents.albedo);
    detail::read_block(is, s.image);
  }
  if (!is) throw std::runtime_error("load_corpus: truncated file");
  return corpus;
}

inline void save_corpus_file(const std::string& path, const Corpus& corpus) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  save_corpus(os, corpus);
}

inline Corpus load_corpus_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return load_corpus(is);
}

// ---- Appendix-style capacity-matched approximation experiment ----

// Truncated power-series target: g*(x) = f*(x) + coupling * h*(v*(x)), with
// f*, v*, h* random polynomials of total order `order` on [-1,1]^dim, each
// normalized by its coefficient l1 mass.
struct PolyTarget {
  int dim = 2;
  int order = 2;
  double coupling = 1.0;
  std::uint64_t seed = 1;
};

struct ApproxConfig {
  int depth = 3;  // hidden layers per network; width is dim + 4
  int train_n = 512;
  int test_n = 256;
  int steps = 2000;
  int batch = 64;
  double lr = 3e-3;
  std::uint64_t seed = 0;
};

struct ApproxResult {
  double mse_independent = 0.0;
  double mse_composed = 0.0;
};

namespace detail {

// Multi-indices with total degree <= order.
inline void enumerate_monomials(int dim, int order, std::vector<std::vector<int>>& out,
                                std::vector<int>& cur, int pos, int left) {
  if (pos == dim) {
    out.push_back(cur);
    return;
  }
  for (int d = 0; d <= left; ++d) {
    cur[static_cast<std::size_t>(pos)] = d;
    enumerate_monomials(dim, order, out, cur, pos + 1, left - d);
  }
}

struct Poly {
  std::vector<std::vector<int>> monomials;
  std::vector<double> coef;
  double norm = 1.0;

  static Poly random(int dim, int order, Rng& rng) {
    Poly p;
    std::vector<int> cur(static_cast<std::size_t>(dim), 0);
    enumerate_monomials(dim, order, p.monomials, cur, 0, order);
    p.coef.resize(p.monomials.size());
    double mass = 1e-9;
    for (double& c : p.coef) {
      c = rng.uniform(-1.0, 1.0);
      mass += std::fabs(c);
    }
    p.norm = mass;
    return p;
  }

  double eval(const std::vector<double>& x) const {
    double acc = 0.0;
    for (std::size_t m = 0; m < monomials.size(); ++m) {
      double term = coef[m];
      for (std::size_t i = 0; i < x.size(); ++i) {
        for (int d = 0; d < monomials[m][i]; ++d) term *= x[i];
      }
      acc += term;
    }
    return acc / norm;
  }
};

}  // namespace detail

// Trains the two structures of the motivating example with identical budgets:
// L_a = f_L(x) alone vs L_b = f_L(x) + h_L(f_V(x)) with capacity-matched ReLU
// networks (depth T, width dim+4 each). Returns held-out MSEs.
inline ApproxResult approx_experiment(const PolyTarget& target, const ApproxConfig& cfg) {
  if (cfg.depth < 1) throw std::invalid_argument("approx_experiment: depth must be >= 1");
  Rng coef_rng = derive_rng(target.seed, "poly-coefs");
  const detail::Poly f_star = detail::Poly::random(target.dim, target.order, coef_rng);
  const detail::Poly v_star = detail::Poly::random(target.dim, target.order, coef_rng);
  const detail::Poly h_star = detail::Poly::random(1, target.order, coef_rng);

  auto g_star = [&](const std::vector<double>& x) {
    double y = f_star.eval(x);
    if (target.coupling != 0.0) y += target.coupling * h_star.eval({v_star.eval(x)});
    return y;
  };

  Rng data_rng = derive_rng(cfg.seed, "approx-data");
  const int n_total = cfg.train_n + cfg.test_n;
  std::vector<std::vector<double>> xs(static_cast<std::size_t>(n_total));
  std::vector<double> ys(static_cast<std::size_t>(n_total));
  for (int i = 0; i < n_total; ++i) {
    xs[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(target.dim));
    for (double& v : xs[static_cast<std::size_t>(i)]) v = data_rng.uniform(-1.0, 1.0);
    ys[static_cast<std::size_t>(i)] = g_star(xs[static_cast<std::size_t>(i)]);
  }

  const int width = target.dim + 4;
  auto widths = [&](int in, int out) {
    std::vector<int> w;
    w.push_back(in);
    for (int i = 0; i < cfg.depth; ++i) w.push_back(width);
    w.push_back(out);
    return w;
  };
  const MlpSpec spec_fl = make_mlp(widths(target.dim, 1), Act::Relu, Act::Identity);
  const MlpSpec spec_fv = make_mlp(widths(target.dim, 1), Act::Relu, Act::Identity);
  const MlpSpec spec_hl = make_mlp(widths(1, 1), Act::Relu, Act::Identity);

  auto run = [&](bool composed) {
    ParamStore params;
    Rng init = derive_rng(cfg.seed, composed ? "approx-init-b" : "approx-init-a");
    mlp_init(params, "fL", spec_fl, init);
    if (composed) {
      mlp_init(params, "fV", spec_fv, init);
      mlp_init(params, "hL", spec_hl, init);
    }
    auto forward = [&](Tape& t, TapeBind& bind, Var x) {
      Var y = mlp_forward(t, bind, "fL", spec_fl, x);
      if (composed) {
        Var v = mlp_forward(t, bind, "fV", spec_fv, x);
        y = t.add(y, mlp_forward(t, bind, "hL", spec_hl, v));
      }
      return y;
    };
    Rng batch_rng = derive_rng(cfg.seed, "approx-batches");
    AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
    Tape t;
    for (int step = 0; step < cfg.steps; ++step) {
      const int B = std::min(cfg.batch, cfg.train_n);
      Tensor bx({B, target.dim});
      Tensor by({B, 1});
      for (int b = 0; b < B; ++b) {
        const int i = static_cast<int>(batch_rng.below(static_cast<std::uint64_t>(cfg.train_n)));
        for (int c = 0; c < target.dim; ++c) bx.at(b, c) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
        by.at(b, 0) = ys[static_cast<std::size_t>(i)];
      }
      t.reset();
      TapeBind bind(t, params);
      Var err = t.sub(forward(t, bind, t.constant(std::move(bx))), t.constant(std::move(by)));
      Var loss = t.mean(t.mul(err, err));
      t.backward(loss);
      adam_step(params, bind.grads(), adam);
    }
    // held-out MSE
    Tensor tx({cfg.test_n, target.dim});
    Tensor ty({cfg.test_n, 1});
    for (int i = 0; i < cfg.test_n; ++i) {
      for (int c = 0; c < target.dim; ++c) {
        tx.at(i, c) = xs[static_cast<std::size_t>(cfg.train_n + i)][static_cast<std::size_t>(c)];
      }
      ty.at(i, 0) = ys[static_cast<std::size_t>(cfg.train_n + i)];
    }
    t.reset();
    TapeBind bind(t, params);
    Var err = t.sub(forward(t, bind, t.constant(std::move(tx))), t.constant(std::move(ty)));
    return t.val(t.mean(t.mul(err, err))).item();
  };

  ApproxResult res;
  res.mse_independent = run(false);
  res.mse_composed = run(true);
  return res;
}

}  // namespace scr
