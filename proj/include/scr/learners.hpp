#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "scr/gp.hpp"
#include "scr/metrics.hpp"
#include "scr/pipeline.hpp"
#include "scr/synth.hpp"

namespace scr {

struct TrainConfig {
  int steps = 3000;
  int batch = 8;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int val_every = 50;
  int curve_every = 10;
};

struct TrainCurves {
  std::vector<std::pair<int, double>> train;  // (step, batch loss)
  std::vector<std::pair<int, double>> val;    // (step, full validation loss)
  double final_val = std::numeric_limits<double>::infinity();
};

struct TrainOutcome {
  bool ok = false;
  std::string error;
  int steps_done = 0;
  TrainCurves curves;
};

// Precomputed frozen target features phi(I), keyed by corpus index.
class FeatureCache {
 public:
  FeatureCache(ScrModel& model, const Corpus& corpus)
      : model_(&model), corpus_(&corpus), feats_(corpus.samples.size()),
        ready_(corpus.samples.size(), 0),
        enabled_(model.config().use_perceptual && model.config().lambda_p != 0.0) {}

  const Tensor* get(int idx) {
    if (!enabled_) return nullptr;
    auto i = static_cast<std::size_t>(idx);
    if (!ready_[i]) {
      const Tensor& img = corpus_->samples[i].image;
      feats_[i] = model_->feature_extractor().features_plain(
          Tensor({1, static_cast<int>(img.numel())}, img.data()));
      ready_[i] = 1;
    }
    return &feats_[i];
  }

 private:
  ScrModel* model_;
  const Corpus* corpus_;
  std::vector<Tensor> feats_;
  std::vector<char> ready_;
  bool enabled_;
};

namespace detail {

inline bool grads_finite(const GradList& grads) {
  for (const auto& [name, g] : grads) {
    if (!g.all_finite()) return false;
  }
  return true;
}

}  // namespace detail

// Mean loss over the given corpus indices, evaluated in fixed chunks (no
// randomness, no gradients).
inline double dataset_loss(ScrModel& model, const Corpus& corpus, const std::vector<int>& idx,
                           const AdjacencyFn& adj_fn, FeatureCache& cache, int chunk = 16) {
  if (idx.empty()) throw std::invalid_argument("dataset_loss: empty index set");
  double acc = 0.0;
  Tape t;
  for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(chunk)) {
    const std::size_t end = std::min(idx.size(), start + static_cast<std::size_t>(chunk));
    std::vector<const Tensor*> images;
    std::vector<const Tensor*> feats;
    for (std::size_t i = start; i < end; ++i) {
      images.push_back(&corpus.samples[static_cast<std::size_t>(idx[i])].image);
      feats.push_back(cache.get(idx[i]));
    }
    t.reset();
    TapeBind bind(t, model.params(), /*trainable=*/false);
    auto bl = model.build_batch_loss(t, bind, images, feats, adj_fn);
    for (const auto& s : bl.samples) acc += t.val(s.loss).item();
  }
  return acc / static_cast<double>(idx.size());
}

// Plain W training with a fixed adjacency provider (static matrix or dynamic
// attention). Aborts on the first non-finite loss or gradient, keeping the
// last finite parameter state.
inline TrainOutcome train_fixed(ScrModel& model, const Corpus& corpus, const Splits& splits,
                                const AdjacencyFn& adj_fn, const TrainConfig& cfg) {
  TrainOutcome out;
  FeatureCache cache(model, corpus);
  Rng batch_rng = derive_rng(cfg.seed, "batches");
  AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
  Tape t;
  for (int step = 0; step < cfg.steps; ++step) {
    const int B = std::min<int>(cfg.batch, static_cast<int>(splits.train.size()));
    std::vector<const Tensor*> images;
    std::vector<const Tensor*> feats;
    for (int b = 0; b < B; ++b) {
      const int idx = splits.train[static_cast<std::size_t>(
          batch_rng.below(static_cast<std::uint64_t>(splits.train.size())))];
      images.push_back(&corpus.samples[static_cast<std::size_t>(idx)].image);
      feats.push_back(cache.get(idx));
    }
    t.reset();
    TapeBind bind(t, model.params());
    auto bl = model.build_batch_loss(t, bind, images, feats, adj_fn);
    const double loss = t.val(bl.total).item();
    if (!std::isfinite(loss)) {
      out.error = "non-finite training loss at step " + std::to_string(step);
      out.steps_done = step;
      return out;
    }
    t.backward(bl.total);
    GradList grads = bind.grads();
    if (!detail::grads_finite(grads)) {
      out.error = "non-finite gradient at step " + std::to_string(step);
      out.steps_done = step;
      return out;
    }
    adam_step(model.params(), grads, adam);
    if (cfg.curve_every > 0 && step % cfg.curve_every == 0) {
      out.curves.train.emplace_back(step, loss);
    }
    if (cfg.val_every > 0 && step % cfg.val_every == 0) {
      out.curves.val.emplace_back(step, dataset_loss(model, corpus, splits.val, adj_fn, cache));
    }
  }
  out.curves.final_val = dataset_loss(model, corpus, splits.val, adj_fn, cache);
  out.curves.val.emplace_back(cfg.steps, out.curves.final_val);
  out.steps_done = cfg.steps;
  out.ok = true;
  return out;
}

// ---- dynamic SCR (masked self-attention) ----

enum class AttentionMode { Sigmoid, Cosine };

// Per-sample adjacency q(u) .* mask on the tape. Masked-out entries are plain
// zeros, never Vars, so they are exactly 0 in every emitted matrix.
inline AdjVars dynamic_adjacency_vars(Tape& t, const std::array<Var, 4>& u,
                                      const AdjacencyMatrix& mask, AttentionMode mode) {
  if (mask.n != 4) throw std::invalid_argument("dynamic_adjacency: mask must be 4x4");
  AdjVars adj;
  std::array<Var, 4> norms;
  if (mode == AttentionMode::Cosine) {
    for (int i = 0; i < 4; ++i) {
      Var n2 = t.sum(t.mul(u[static_cast<std::size_t>(i)], u[static_cast<std::size_t>(i)]));
      // max(norm, 1e-8) == relu(norm - 1e-8) + 1e-8
      norms[static_cast<std::size_t>(i)] =
          t.offset(t.relu(t.offset(t.sqrt_(n2), -1e-8)), 1e-8);
    }
  }
  for (int j = 0; j < 4; ++j) {
    for (int k = 0; k < 4; ++k) {
      if (j == k || mask.at(j, k) == 0.0) continue;
      Var dot = t.sum(t.mul(u[static_cast<std::size_t>(j)], u[static_cast<std::size_t>(k)]));
      Var q;
      if (mode == AttentionMode::Sigmoid) {
        q = t.sigmoid(dot);
      } else {
        q = t.div(dot, t.mul(norms[static_cast<std::size_t>(j)],
                             norms[static_cast<std::size_t>(k)]));
      }
      adj.at(j, k).var = q;
      adj.at(j, k).is_var = true;
    }
  }
  return adj;
}

inline AdjacencyFn dynamic_adjacency_fn(const AdjacencyMatrix& mask, AttentionMode mode) {
  return [mask, mode](Tape& t, const std::array<Var, 4>& u) {
    return dynamic_adjacency_vars(t, u, mask, mode);
  };
}

// Input-dependent adjacency for one embedding (plain values).
inline AdjacencyMatrix dynamic_adjacency(const Tensor& embedding, const AdjacencyMatrix& mask,
                                         AttentionMode mode) {
  if (embedding.ndim() != 2 || embedding.dim(0) != 4) {
    throw std::invalid_argument("dynamic_adjacency: embedding must be 4 x d");
  }
  Tape t;
  const int d = embedding.dim(1);
  std::array<Var, 4> u;
  for (int k = 0; k < 4; ++k) {
    Tensor row({1, d});
    for (int c = 0; c < d; ++c) row.at(0, c) = embedding.at(k, c);
    u[static_cast<std::size_t>(k)] = t.constant(std::move(row));
  }
  AdjVars adj = dynamic_adjacency_vars(t, u, mask, mode);
  return adj.snapshot(t);
}

// ---- unrolled bilevel outer gradient ----

enum class HypergradMode { FirstOrder, FiniteDiffHvp };

// Builds a scalar loss from the current W/M bindings.
using LossBuilder = std::function<Var(Tape&, TapeBind& w_bind, TapeBind& m_bind)>;

struct UnrollConfig {
  double eta = 1e-3;  // SGD step size inside the unrolled objective
  int unroll_k = 1;
  HypergradMode mode = HypergradMode::FirstOrder;
  double c = 1.0;  // acyclicity constant
  double lambda_init = 10.0;
  double lambda_mult = 10.0;
  int period = 2500;
  double dag_lr_init = 1e-3;
  double dag_lr_mult = 0.5;
  double binarize_tau = 0.01;
  double m_init = 0.5;
  int outer_every = 1;

  void validate() const {
    if (eta <= 0.0) throw std::invalid_argument("UnrollConfig: eta must be positive");
    if (unroll_k < 1) throw std::invalid_argument("UnrollConfig: unroll_k must be >= 1");
    if (period <= 0) throw std::invalid_argument("UnrollConfig: period must be positive");
  }

  double lambda_at(int step) const {
    return lambda_init * std::pow(lambda_mult, step / period);
  }
  double dag_lr_at(int step) const {
    return dag_lr_init * std::pow(dag_lr_mult, step / period);
  }
};

namespace detail {

inline GradList loss_grads_wrt(ParamStore& w, ParamStore& m, const LossBuilder& build,
                               bool wrt_m, GradList* other = nullptr) {
  Tape t;
  TapeBind wb(t, w, /*trainable=*/true);
  TapeBind mb(t, m, /*trainable=*/true);
  Var loss = build(t, wb, mb);
  t.backward(loss);
  if (other) *other = wrt_m ? wb.grads() : mb.grads();
  return wrt_m ? mb.grads() : wb.grads();
}

inline void axpy(ParamStore& store, const GradList& g, double a) {
  for (const auto& [name, grad] : g) {
    Tensor& v = store.get(name);
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] += a * grad[i];
  }
}

}  // namespace detail

// d/dM of L_val(W - eta * grad_W L_train(W, M), M). FirstOrder keeps only the
// direct partial at the unrolled point; FiniteDiffHvp adds the second-order
// cross term via central differences (k = 1 only).
inline GradList unrolled_outer_grad(ParamStore& w, ParamStore& m, const LossBuilder& train_loss,
                                    const LossBuilder& val_loss, const UnrollConfig& cfg) {
  cfg.validate();
  // k explicit SGD steps from the current W
  ParamStore w_unrolled = w;
  for (int i = 0; i < cfg.unroll_k; ++i) {
    GradList gw = detail::loss_grads_wrt(w_unrolled, m, train_loss, /*wrt_m=*/false);
    detail::axpy(w_unrolled, gw, -cfg.eta);
  }
  // validation loss at the unrolled point; W leaves only need gradients when
  // the finite-difference cross term will use them
  GradList gv_w;
  Tape t;
  TapeBind wb(t, w_unrolled, /*trainable=*/cfg.mode == HypergradMode::FiniteDiffHvp);
  TapeBind mb(t, m, /*trainable=*/true);
  Var loss = val_loss(t, wb, mb);
  t.backward(loss);
  GradList gm = mb.grads();
  if (cfg.mode == HypergradMode::FirstOrder) return gm;

  if (cfg.unroll_k != 1) {
    throw std::invalid_argument("unrolled_outer_grad: finite-difference mode requires k = 1");
  }
  gv_w = wb.grads();
  double norm = 0.0;
  for (const auto& [name, g] : gv_w) {
    for (std::size_t i = 0; i < g.numel(); ++i) norm += g[i] * g[i];
  }
  norm = std::sqrt(norm);
  if (norm == 0.0) return gm;
  const double r = 0.01 / norm;

  ParamStore w_plus = w, w_minus = w;
  detail::axpy(w_plus, gv_w, r);
  detail::axpy(w_minus, gv_w, -r);
  GradList gm_plus = detail::loss_grads_wrt(w_plus, m, train_loss, /*wrt_m=*/true);
  GradList gm_minus = detail::loss_grads_wrt(w_minus, m, train_loss, /*wrt_m=*/true);
  for (std::size_t i = 0; i < gm.size(); ++i) {
    for (std::size_t k = 0; k < gm[i].second.numel(); ++k) {
      gm[i].second[k] -= cfg.eta * (gm_plus[i].second[k] - gm_minus[i].second[k]) / (2.0 * r);
    }
  }
  return gm;
}

// ---- generic SCR learners (Eq.-style unrolling) ----

struct ScheduleEntry {
  int step = 0;
  double lambda_dag = 0.0;
  double dag_lr = 0.0;
};

struct GenericResult {
  bool ok = false;
  std::string error;
  AdjacencyMatrix continuous;
  AdjacencyMatrix binarized;
  std::vector<std::string> repair_log;
  std::vector<ScheduleEntry> schedule;
  TrainCurves curves;
};

namespace detail {

inline AdjVars adjacency_from_var(Tape& t, Var m_var, const AdjacencyMatrix* mask) {
  AdjVars adj;
  for (int j = 0; j < 4; ++j) {
    for (int k = 0; k < 4; ++k) {
      if (j == k) continue;
      if (mask && mask->at(j, k) == 0.0) continue;  // exact zero outside the mask
      adj.at(j, k).var = t.slice(m_var, j * 4 + k, 1);
      adj.at(j, k).is_var = true;
    }
  }
  return adj;
}

inline void project_unit_interval(Tensor& m) {
  for (int j = 0; j < 4; ++j) {
    for (int k = 0; k < 4; ++k) {
      double& v = m.data()[static_cast<std::size_t>(j) * 4 + k];
      v = (j == k) ? 0.0 : std::clamp(v, 0.0, 1.0);
    }
  }
}

inline AdjacencyMatrix matrix_from_tensor(const Tensor& t) {
  AdjacencyMatrix m(4);
  for (std::size_t i = 0; i < 16; ++i) m.w[i] = t[i];
  m.zero_diagonal();
  return m;
}

// Drops surviving edges in ascending continuous-weight order until acyclic.
inline void repair_to_dag(AdjacencyMatrix& bin, const AdjacencyMatrix& cont,
                          std::vector<std::string>& log) {
  while (!is_dag(bin, 0.0)) {
    int bj = -1, bk = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < bin.n; ++j) {
      for (int k = 0; k < bin.n; ++k) {
        if (j != k && bin.at(j, k) != 0.0 && cont.at(j, k) < best) {
          best = cont.at(j, k);
          bj = j;
          bk = k;
        }
      }
    }
    if (bj < 0) break;
    bin.at(bj, bk) = 0.0;
    std::ostringstream os;
    os << "dropped edge " << kFactorLabels[static_cast<std::size_t>(bj)] << "->"
       << kFactorLabels[static_cast<std::size_t>(bk)] << " (weight " << best << ")";
    log.push_back(os.str());
  }
}

}  // namespace detail

// Unrolled bilevel learner. With `dense_mask == nullptr` this is the
// H-penalized free-M variant (adds lambda_DAG * H(M) to the outer objective);
// with a mask it optimizes M .* mask and needs no penalty, since every
// subgraph of a dense-ordering mask is acyclic.
inline GenericResult learn_generic_unrolled_impl(ScrModel& model, const Corpus& corpus,
                                                 const Splits& splits,
                                                 const AdjacencyMatrix* dense_mask,
                                                 const Tensor& m0, const UnrollConfig& ucfg,
                                                 const TrainConfig& tcfg) {
  ucfg.validate();
  GenericResult res;
  ParamStore mstore;
  {
    Tensor m = m0;
    detail::project_unit_interval(m);
    mstore.add("M", std::move(m));
  }
  FeatureCache cache(model, corpus);
  Rng batch_rng = derive_rng(tcfg.seed, "batches");
  Rng outer_rng = derive_rng(tcfg.seed, "outer-batches");
  AdamConfig w_adam{tcfg.lr, 0.9, 0.999, 1e-8};

  auto draw = [&](Rng& rng, const std::vector<int>& pool, std::vector<const Tensor*>& images,
                  std::vector<const Tensor*>& feats) {
    const int B = std::min<int>(tcfg.batch, static_cast<int>(pool.size()));
    for (int b = 0; b < B; ++b) {
      const int idx = pool[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(pool.size())))];
      images.push_back(&corpus.samples[static_cast<std::size_t>(idx)].image);
      feats.push_back(cache.get(idx));
    }
  };

  auto effective = [&](const AdjacencyMatrix& m) {
    AdjacencyMatrix eff = m;
    if (dense_mask) {
      for (int j = 0; j < 4; ++j) {
        for (int k = 0; k < 4; ++k) eff.at(j, k) *= dense_mask->at(j, k);
      }
    }
    eff.zero_diagonal();
    return eff;
  };

  Tape t;
  int last_epoch = -1;
  for (int step = 0; step < tcfg.steps; ++step) {
    const double lambda_dag = ucfg.lambda_at(step);
    const double dag_lr = ucfg.dag_lr_at(step);
    if (step / ucfg.period != last_epoch) {
      last_epoch = step / ucfg.period;
      res.schedule.push_back({step, lambda_dag, dag_lr});
    }

    // inner W step at the current M
    const AdjacencyMatrix m_now = effective(detail::matrix_from_tensor(mstore.get("M")));
    {
      std::vector<const Tensor*> images, feats;
      draw(batch_rng, splits.train, images, feats);
      t.reset();
      TapeBind bind(t, model.params());
      auto bl = model.build_batch_loss(t, bind, images, feats, static_adjacency(m_now));
      const double loss = t.val(bl.total).item();
      if (!std::isfinite(loss)) {
        res.error = "non-finite inner loss at step " + std::to_string(step);
        res.continuous = detail::matrix_from_tensor(mstore.get("M"));
        return res;
      }
      t.backward(bl.total);
      GradList grads = bind.grads();
      if (!detail::grads_finite(grads)) {
        res.error = "non-finite inner gradient at step " + std::to_string(step);
        res.continuous = detail::matrix_from_tensor(mstore.get("M"));
        return res;
      }
      adam_step(model.params(), grads, w_adam);
      if (tcfg.curve_every > 0 && step % tcfg.curve_every == 0) {
        res.curves.train.emplace_back(step, loss);
      }
    }

    // outer M step on the unrolled objective
    if (step % ucfg.outer_every == 0) {
      std::vector<const Tensor*> tr_images, tr_feats, va_images, va_feats;
      draw(outer_rng, splits.train, tr_images, tr_feats);
      draw(outer_rng, splits.val, va_images, va_feats);

      auto batch_loss = [&](Tape& tp, TapeBind& wb, TapeBind& mb,
                            const std::vector<const Tensor*>& images,
                            const std::vector<const Tensor*>& feats) {
        Var m_var = mb["M"];
        AdjVars adj = detail::adjacency_from_var(tp, m_var, dense_mask);
        AdjacencyFn fn = [&adj](Tape&, const std::array<Var, 4>&) { return adj; };
        return model.build_batch_loss(tp, wb, images, feats, fn).total;
      };
      LossBuilder train_builder = [&](Tape& tp, TapeBind& wb, TapeBind& mb) {
        return batch_loss(tp, wb, mb, tr_images, tr_feats);
      };
      LossBuilder val_builder = [&](Tape& tp, TapeBind& wb, TapeBind& mb) {
        Var loss = batch_loss(tp, wb, mb, va_images, va_feats);
        if (!dense_mask) {
          Var m_var = tp.reshape(mb["M"], {4, 4});
          loss = tp.add(loss, tp.scale(acyclicity_penalty(tp, m_var, ucfg.c), lambda_dag));
        }
        return loss;
      };
      GradList gm = unrolled_outer_grad(model.params(), mstore, train_builder, val_builder, ucfg);
      if (!detail::grads_finite(gm)) {
        res.error = "non-finite outer gradient at step " + std::to_string(step);
        res.continuous = detail::matrix_from_tensor(mstore.get("M"));
        return res;
      }
      adam_step(mstore, gm, AdamConfig{dag_lr, 0.9, 0.999, 1e-8});
      detail::project_unit_interval(mstore.get("M"));
    }

    if (tcfg.val_every > 0 && step % tcfg.val_every == 0) {
      const AdjacencyMatrix m_cur = effective(detail::matrix_from_tensor(mstore.get("M")));
      res.curves.val.emplace_back(
          step, dataset_loss(model, corpus, splits.val, static_adjacency(m_cur), cache));
    }
  }

  res.continuous = effective(detail::matrix_from_tensor(mstore.get("M")));
  res.curves.final_val = dataset_loss(model, corpus, splits.val,
                                      static_adjacency(res.continuous), cache);
  res.curves.val.emplace_back(tcfg.steps, res.curves.final_val);
  res.binarized = binarize(res.continuous, ucfg.binarize_tau);
  if (!dense_mask) {
    detail::repair_to_dag(res.binarized, res.continuous, res.repair_log);
  }
  res.ok = true;
  return res;
}

inline GenericResult learn_generic_unrolled(ScrModel& model, const Corpus& corpus,
                                            const Splits& splits, const Tensor& m0,
                                            const UnrollConfig& ucfg, const TrainConfig& tcfg) {
  return learn_generic_unrolled_impl(model, corpus, splits, nullptr, m0, ucfg, tcfg);
}

inline GenericResult learn_generic_masked(ScrModel& model, const Corpus& corpus,
                                          const Splits& splits, const AdjacencyMatrix& dense_mask,
                                          const Tensor& m0, const UnrollConfig& ucfg,
                                          const TrainConfig& tcfg) {
  if (!is_dag(dense_mask, 0.0)) {
    throw std::invalid_argument("learn_generic_masked: dense mask must be a DAG");
  }
  return learn_generic_unrolled_impl(model, corpus, splits, &dense_mask, m0, ucfg, tcfg);
}

// ---- dense SCR via BO ----

struct DenseBoSettings {
  PipelineConfig pipe;
  TrainConfig inner;  // fresh model trained per candidate ordering
  int iterations = 10;
  bool supervised_val = false;
  std::uint64_t seed = 0;
  BoConfig bo;
};

// Evaluates candidate orderings by retraining from scratch and scoring the
// validation split; delegates the search itself to bo_search.
inline BoResult learn_dense_bo(const Corpus& corpus, const Splits& splits,
                               const DenseBoSettings& settings) {
  auto evaluator = [&](const DenseOrdering& pi) -> double {
    const AdjacencyMatrix mask = ordering_to_mask(pi);
    ScrModel model(settings.pipe, derive_seed(settings.seed, "bo-eval:" + pi.label()));
    TrainConfig inner = settings.inner;
    inner.seed = derive_seed(settings.seed, "bo-train:" + pi.label());
    TrainOutcome outcome = train_fixed(model, corpus, splits, static_adjacency(mask), inner);
    if (!outcome.ok) return std::numeric_limits<double>::infinity();
    if (!settings.supervised_val) return outcome.curves.final_val;
    // supervised option: ground-truth depth error on the validation split
    double acc = 0.0;
    for (int idx : splits.val) {
      const SceneSample& s = corpus.samples[static_cast<std::size_t>(idx)];
      FactorSet pred = predict_factors(model, s.image, static_adjacency(mask));
      acc += side(pred.depth, s.latents.depth);
    }
    return acc / static_cast<double>(splits.val.size());
  };
  return bo_search(evaluator, settings.iterations, settings.bo);
}

// ---- retraining with a fixed structure + evaluation ----

struct EvalMetrics {
  double side_mean = 0.0;
  double mad_mean = 0.0;
  double loss = 0.0;
  int count = 0;
};

inline EvalMetrics evaluate_split(ScrModel& model, const Corpus& corpus,
                                  const std::vector<int>& idx, const AdjacencyFn& adj_fn) {
  EvalMetrics m;
  FeatureCache cache(model, corpus);
  for (int i : idx) {
    const SceneSample& s = corpus.samples[static_cast<std::size_t>(i)];
    FactorSet pred = predict_factors(model, s.image, adj_fn);
    m.side_mean += side(pred.depth, s.latents.depth);
    m.mad_mean += mad_degrees(pred.depth, s.latents.depth);
    ++m.count;
  }
  m.side_mean /= static_cast<double>(m.count);
  m.mad_mean /= static_cast<double>(m.count);
  m.loss = dataset_loss(model, corpus, idx, adj_fn, cache);
  return m;
}

struct RetrainResult {
  TrainOutcome outcome;
  EvalMetrics test;
};

// Fresh W trained against a fixed structure (static DAG or attention mode).
inline RetrainResult retrain_fixed(ScrModel& model, const Corpus& corpus, const Splits& splits,
                                   const AdjacencyFn& adj_fn, const TrainConfig& cfg,
                                   const AdjacencyMatrix* static_m = nullptr) {
  if (static_m && !is_dag(*static_m)) {
    throw std::invalid_argument("retrain_fixed: static adjacency must be a DAG");
  }
  RetrainResult res;
  res.outcome = train_fixed(model, corpus, splits, adj_fn, cfg);
  if (res.outcome.ok) {
    res.test = evaluate_split(model, corpus, splits.test, adj_fn);
  }
  return res;
}

}  // namespace scr
