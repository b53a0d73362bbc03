#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scr/dag.hpp"

namespace scr {

// Spearman-footrule displacement: sum over factors of |position difference|.
inline int footrule_displacement(const DenseOrdering& a, const DenseOrdering& b) {
  if (a.n() != b.n()) throw std::invalid_argument("footrule_displacement: size mismatch");
  const std::vector<int> pa = a.positions(), pb = b.positions();
  int d = 0;
  for (int f = 0; f < a.n(); ++f) {
    d += std::abs(pa[static_cast<std::size_t>(f)] - pb[static_cast<std::size_t>(f)]);
  }
  return d;
}

// Position permutation kernel K(pi1, pi2 | lambda) = exp(-lambda * displacement).
inline double kernel_eval(const DenseOrdering& a, const DenseOrdering& b, double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("kernel_eval: lambda must be positive");
  return std::exp(-lambda * footrule_displacement(a, b));
}

namespace detail {

// Lower-triangular Cholesky of a symmetric matrix (row-major). Returns false
// when the matrix is not positive definite.
inline bool cholesky(std::vector<double>& a, int n) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[static_cast<std::size_t>(i) * n + j];
      for (int k = 0; k < j; ++k) {
        s -= a[static_cast<std::size_t>(i) * n + k] * a[static_cast<std::size_t>(j) * n + k];
      }
      if (i == j) {
        if (s <= 0.0) return false;
        a[static_cast<std::size_t>(i) * n + j] = std::sqrt(s);
      } else {
        a[static_cast<std::size_t>(i) * n + j] = s / a[static_cast<std::size_t>(j) * n + j];
      }
    }
    for (int j = i + 1; j < n; ++j) a[static_cast<std::size_t>(i) * n + j] = 0.0;
  }
  return true;
}

inline void solve_lower(const std::vector<double>& l, int n, std::vector<double>& x) {
  for (int i = 0; i < n; ++i) {
    double s = x[static_cast<std::size_t>(i)];
    for (int k = 0; k < i; ++k) s -= l[static_cast<std::size_t>(i) * n + k] * x[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i) * n + i];
  }
}

inline void solve_upper_t(const std::vector<double>& l, int n, std::vector<double>& x) {
  for (int i = n - 1; i >= 0; --i) {
    double s = x[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < n; ++k) s -= l[static_cast<std::size_t>(k) * n + i] * x[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i) * n + i];
  }
}

}  // namespace detail

// GP posterior over ordering -> score with unit prior variance and zero prior
// mean. Raw targets are used as given; any standardization is the caller's
// concern.
class GpSurrogate {
 public:
  void set_observations(std::vector<DenseOrdering> xs, std::vector<double> ys) {
    if (xs.size() != ys.size()) {
      throw std::invalid_argument("GpSurrogate: orderings/scores count mismatch");
    }
    xs_ = std::move(xs);
    ys_ = std::move(ys);
    fitted_ = false;
  }

  void add(const DenseOrdering& x, double y) {
    xs_.push_back(x);
    ys_.push_back(y);
    fitted_ = false;
  }

  std::size_t count() const { return xs_.size(); }
  const std::vector<DenseOrdering>& orderings() const { return xs_; }
  const std::vector<double>& scores() const { return ys_; }
  double lambda() const { return lambda_; }
  double noise() const { return noise_; }
  double jitter() const { return jitter_; }
  bool fitted() const { return fitted_; }

  // Factorizes K + (noise + jitter) I; escalates jitter from 1e-8 by x10 when
  // the Gram matrix is numerically singular, and reports if that never helps.
  void fit(double lambda, double noise) {
    if (lambda <= 0.0) throw std::invalid_argument("GpSurrogate::fit: lambda must be positive");
    if (noise < 0.0) throw std::invalid_argument("GpSurrogate::fit: negative noise");
    lambda_ = lambda;
    noise_ = noise;
    const int m = static_cast<int>(xs_.size());
    if (m == 0) {  // prior-only surrogate
      chol_.clear();
      alpha_.clear();
      jitter_ = 0.0;
      fitted_ = true;
      return;
    }
    std::vector<double> gram(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        gram[static_cast<std::size_t>(i) * m + j] =
            kernel_eval(xs_[static_cast<std::size_t>(i)], xs_[static_cast<std::size_t>(j)], lambda);
      }
    }
    double jitter = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      chol_ = gram;
      for (int i = 0; i < m; ++i) chol_[static_cast<std::size_t>(i) * m + i] += noise + jitter;
      if (detail::cholesky(chol_, m)) {
        alpha_ = ys_;
        detail::solve_lower(chol_, m, alpha_);
        detail::solve_upper_t(chol_, m, alpha_);
        jitter_ = jitter;
        fitted_ = true;
        return;
      }
      jitter = jitter == 0.0 ? 1e-8 : jitter * 10.0;
    }
    throw std::runtime_error("GpSurrogate::fit: Gram matrix singular even with jitter");
  }

  // Posterior mean and variance (variance clipped at 0 from below).
  std::pair<double, double> posterior(const DenseOrdering& x) const {
    if (!fitted_) throw std::logic_error("GpSurrogate::posterior: surrogate not fitted");
    const int m = static_cast<int>(xs_.size());
    if (m == 0) return {0.0, 1.0};
    std::vector<double> ks(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) ks[static_cast<std::size_t>(i)] = kernel_eval(xs_[static_cast<std::size_t>(i)], x, lambda_);
    double mu = 0.0;
    for (int i = 0; i < m; ++i) mu += ks[static_cast<std::size_t>(i)] * alpha_[static_cast<std::size_t>(i)];
    std::vector<double> z = ks;
    detail::solve_lower(chol_, m, z);
    double quad = 0.0;
    for (double v : z) quad += v * v;
    const double var = 1.0 - quad;  // K(x,x) = 1
    return {mu, var > 0.0 ? var : 0.0};
  }

  double log_marginal_likelihood() const {
    if (!fitted_) throw std::logic_error("GpSurrogate: not fitted");
    const int m = static_cast<int>(xs_.size());
    double fit_term = 0.0;
    for (int i = 0; i < m; ++i) fit_term += ys_[static_cast<std::size_t>(i)] * alpha_[static_cast<std::size_t>(i)];
    double logdet_half = 0.0;
    for (int i = 0; i < m; ++i) logdet_half += std::log(chol_[static_cast<std::size_t>(i) * m + i]);
    const double ln2pi = 1.8378770664093454835606594728112;
    return -0.5 * fit_term - logdet_half - 0.5 * m * ln2pi;
  }

  // d MLL / d lambda at the current fit (dK/dlambda = -D .* K).
  double mll_grad_lambda() const {
    if (!fitted_) throw std::logic_error("GpSurrogate: not fitted");
    const int m = static_cast<int>(xs_.size());
    if (m == 0) return 0.0;
    std::vector<double> dk(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        const int d = footrule_displacement(xs_[static_cast<std::size_t>(i)], xs_[static_cast<std::size_t>(j)]);
        dk[static_cast<std::size_t>(i) * m + j] = -d * std::exp(-lambda_ * d);
      }
    }
    // 0.5 * alpha^T dK alpha - 0.5 tr(Kn^{-1} dK)
    double quad = 0.0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        quad += alpha_[static_cast<std::size_t>(i)] * dk[static_cast<std::size_t>(i) * m + j] * alpha_[static_cast<std::size_t>(j)];
      }
    }
    double tr = 0.0;
    std::vector<double> col(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) col[static_cast<std::size_t>(i)] = dk[static_cast<std::size_t>(i) * m + j];
      detail::solve_lower(chol_, m, col);
      detail::solve_upper_t(chol_, m, col);
      tr += col[static_cast<std::size_t>(j)];
    }
    return 0.5 * quad - 0.5 * tr;
  }

 private:
  std::vector<DenseOrdering> xs_;
  std::vector<double> ys_;
  double lambda_ = 1.0;
  double noise_ = 0.0;
  double jitter_ = 0.0;
  std::vector<double> chol_;
  std::vector<double> alpha_;
  bool fitted_ = false;
};

struct LambdaFitResult {
  double lambda = 1.0;
  double mll = 0.0;
  int steps = 0;
};

// Maximizes the GP marginal log-likelihood over log(lambda) with Adam (lr 0.1)
// until |delta MLL| < 1e-8 or 2000 steps.
inline LambdaFitResult fit_lambda(GpSurrogate& gp, double noise, double init_lambda = 1.0) {
  if (gp.count() < 2) throw std::invalid_argument("fit_lambda: needs at least 2 observations");
  double x = std::log(init_lambda);
  const double lo = std::log(1e-4), hi = std::log(1e3);
  double m = 0.0, v = 0.0;
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  gp.fit(std::exp(x), noise);
  double prev = gp.log_marginal_likelihood();
  int step = 0;
  for (; step < 2000; ++step) {
    const double g = -gp.mll_grad_lambda() * std::exp(x);  // minimize -MLL in log-space
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mhat = m / (1.0 - std::pow(b1, step + 1));
    const double vhat = v / (1.0 - std::pow(b2, step + 1));
    x -= lr * mhat / (std::sqrt(vhat) + eps);
    if (x < lo) x = lo;
    if (x > hi) x = hi;
    gp.fit(std::exp(x), noise);
    const double cur = gp.log_marginal_likelihood();
    if (std::abs(cur - prev) < 1e-8) {
      prev = cur;
      ++step;
      break;
    }
    prev = cur;
  }
  return {std::exp(x), prev, step};
}

// Expected improvement under the minimization convention.
inline double expected_improvement(double mu, double sigma, double best) {
  if (sigma < 0.0) throw std::invalid_argument("expected_improvement: negative sigma");
  const double gap = best - mu;
  if (sigma == 0.0) return gap > 0.0 ? gap : 0.0;
  const double z = gap / sigma;
  const double inv_sqrt2 = 0.70710678118654752440084436210485;
  const double inv_sqrt2pi = 0.39894228040143267793994605993438;
  const double cdf = 0.5 * std::erfc(-z * inv_sqrt2);
  const double pdf = inv_sqrt2pi * std::exp(-0.5 * z * z);
  const double ei = gap * cdf + sigma * pdf;
  return ei > 0.0 ? ei : 0.0;
}

struct BoRecord {
  int iteration = 0;
  DenseOrdering ordering;
  double score = 0.0;
  double lambda = 0.0;  // fitted lambda when acquired (0 for seed designs)
  double ei = 0.0;      // EI of the chosen point (0 for seed designs)
  bool acquired = false;
};

struct BoResult {
  DenseOrdering best;
  double best_score = std::numeric_limits<double>::infinity();
  std::vector<BoRecord> trace;
};

struct BoConfig {
  int n = 4;
  std::vector<std::string> seed_orderings = {"VDLA", "DAVL"};
  double noise_frac = 1e-4;  // observation noise as a fraction of score variance
  double init_lambda = 1.0;
};

// Sequential BO over dense orderings. Acquisition is maximized exhaustively
// over all not-yet-evaluated permutations; an ordering is never re-evaluated.
// Non-finite evaluator results are kept as +inf in the trace but capped when
// standardizing the GP targets.
inline BoResult bo_search(const std::function<double(const DenseOrdering&)>& evaluator,
                          int iterations, const BoConfig& cfg = {}) {
  if (iterations < 1) throw std::invalid_argument("bo_search: iterations must be >= 1");
  const std::vector<DenseOrdering> all = all_orderings(cfg.n);
  const double inf = std::numeric_limits<double>::infinity();

  BoResult res;
  std::vector<char> evaluated(all.size(), 0);
  auto find_index = [&](const DenseOrdering& d) -> std::size_t {
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i] == d) return i;
    }
    throw std::invalid_argument("bo_search: ordering outside candidate set");
  };

  auto run_eval = [&](const DenseOrdering& d) -> double {
    double s;
    try {
      s = evaluator(d);
    } catch (const std::exception& e) {
      throw std::runtime_error("bo_search: evaluator failed on ordering " + d.label() + ": " +
                               e.what());
    }
    return std::isfinite(s) ? s : inf;
  };

  std::vector<DenseOrdering> xs;
  std::vector<double> ys;
  auto record = [&](const DenseOrdering& d, double score, double lambda, double ei,
                    bool acquired) {
    evaluated[find_index(d)] = 1;
    xs.push_back(d);
    ys.push_back(score);
    res.trace.push_back(
        {static_cast<int>(res.trace.size()), d, score, lambda, ei, acquired});
  };

  // seed designs
  for (const std::string& label : cfg.seed_orderings) {
    if (static_cast<int>(res.trace.size()) >= iterations) break;
    const DenseOrdering d =
        cfg.n == 4 ? DenseOrdering::from_label(label) : DenseOrdering::identity(cfg.n);
    if (evaluated[find_index(d)]) continue;
    record(d, run_eval(d), 0.0, 0.0, false);
  }

  while (static_cast<int>(res.trace.size()) < iterations &&
         res.trace.size() < all.size()) {
    // standardize finite scores; cap failures above the worst finite one
    std::vector<double> finite;
    for (double y : ys) {
      if (std::isfinite(y)) finite.push_back(y);
    }
    double mean = 0.0, var = 0.0;
    for (double y : finite) mean += y;
    if (!finite.empty()) mean /= static_cast<double>(finite.size());
    for (double y : finite) var += (y - mean) * (y - mean);
    if (!finite.empty()) var /= static_cast<double>(finite.size());
    const double sd = var > 1e-24 ? std::sqrt(var) : 1.0;
    std::vector<double> std_ys(ys.size());
    double max_std = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (std::isfinite(ys[i])) {
        std_ys[i] = (ys[i] - mean) / sd;
        max_std = std::max(max_std, std_ys[i]);
      }
    }
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (!std::isfinite(ys[i])) std_ys[i] = max_std + 3.0;
    }

    GpSurrogate gp;
    gp.set_observations(xs, std_ys);
    double lambda = cfg.init_lambda;
    if (finite.size() >= 2) {
      lambda = fit_lambda(gp, cfg.noise_frac, cfg.init_lambda).lambda;
    }
    gp.fit(lambda, cfg.noise_frac);

    double best_std = inf;
    for (double y : std_ys) best_std = std::min(best_std, y);

    double best_ei = -1.0;
    std::size_t pick = all.size();
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (evaluated[i]) continue;
      const auto [mu, v2] = gp.posterior(all[i]);
      const double ei = expected_improvement(mu, std::sqrt(v2), best_std);
      if (ei > best_ei) {
        best_ei = ei;
        pick = i;
      }
    }
    if (pick == all.size()) break;
    record(all[pick], run_eval(all[pick]), lambda, best_ei, true);
  }

  res.best = res.trace.front().ordering;
  for (const BoRecord& r : res.trace) {
    if (r.score < res.best_score) {
      res.best_score = r.score;
      res.best = r.ordering;
    }
  }
  return res;
}

}  // namespace scr
