#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "scr/learners.hpp"

using namespace scr;

namespace {

PipelineConfig tiny_pipe() {
  PipelineConfig cfg;
  cfg.grid = 8;
  cfg.embed_dim = 6;
  cfg.enc_hidden = 12;
  cfg.dec_hidden = 12;
  cfg.conf_hidden = 10;
  cfg.feat_hidden = 8;
  cfg.feat_channels = 2;
  return cfg;
}

struct TinyWorld {
  Corpus corpus;
  Splits splits;
};

TinyWorld tiny_world(int samples = 60) {
  ScmConfig scm;
  scm.grid = 8;
  TinyWorld w;
  w.corpus = generate_corpus(scm, samples, 11);
  w.splits = make_splits(samples, SplitRatios{}, 11);
  return w;
}

}  // namespace

TEST_CASE("pure acyclicity-penalty descent strictly decreases H") {
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(500 + seed, "hflow"));
    Tensor m({4, 4});
    for (int j = 0; j < 4; ++j) {
      for (int k = 0; k < 4; ++k) {
        if (j != k) m.at(j, k) = rng.uniform(0.2, 1.0);
      }
    }
    double prev = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 50; ++step) {
      Tape t;
      Var mv = t.leaf(m, true);
      Var h = acyclicity_penalty(t, mv, 1.0);
      const double hv = t.val(h).item();
      CHECK(hv <= prev + 1e-12);
      prev = hv;
      t.backward(h);
      const Tensor& g = t.grad(mv);
      for (int j = 0; j < 4; ++j) {
        for (int k = 0; k < 4; ++k) {
          if (j != k) m.at(j, k) -= 0.01 * g[static_cast<std::size_t>(j * 4 + k)];
        }
      }
    }
    CHECK(prev < 0.5);  // moved well toward the DAG set
  }
}

TEST_CASE("zero matrix is a fixed point of the penalty flow") {
  Tape t;
  Var mv = t.leaf(Tensor({4, 4}), true);
  Var h = acyclicity_penalty(t, mv, 1.0);
  CHECK(t.val(h).item() == 0.0);
  t.backward(h);
  for (std::size_t i = 0; i < 16; ++i) CHECK(t.grad(mv)[i] == 0.0);
}

TEST_CASE("lambda and dag-lr schedules follow the published recipe") {
  UnrollConfig cfg;
  CHECK(cfg.lambda_at(0) == 10.0);
  CHECK(cfg.lambda_at(2499) == 10.0);
  CHECK(cfg.lambda_at(2500) == 100.0);
  CHECK(cfg.lambda_at(5000) == 1000.0);
  CHECK(cfg.dag_lr_at(0) == 1e-3);
  CHECK(cfg.dag_lr_at(2500) == 5e-4);
  CHECK(cfg.dag_lr_at(5000) == 2.5e-4);
}

TEST_CASE("unrolled outer gradient aligns with the exact hypergradient on a quadratic") {
  // inner: L_train(w, m) = 0.5 ||w - A m||^2 with diagonal A; outer:
  // L_val(w) = 0.5 ||w - tgt||^2. At w = w*(m) the exact hypergradient is
  // A^T (w*(m) - tgt); the k=1 unrolled gradient with the finite-difference
  // cross term must point the same way.
  const double a0 = 1.3, a1 = 0.7;
  const double tgt0 = 0.4, tgt1 = -0.9;
  ParamStore w, m;
  m.add("m", Tensor({2}, {0.5, -0.25}));
  w.add("w", Tensor({2}, {a0 * 0.5, a1 * -0.25}));  // inner problem solved exactly

  auto train = [&](Tape& t, TapeBind& wb, TapeBind& mb) {
    Var scale_m = t.mul(mb["m"], t.constant(Tensor({2}, {a0, a1})));
    Var err = t.sub(wb["w"], scale_m);
    return t.scale(t.sum(t.mul(err, err)), 0.5);
  };
  auto val = [&](Tape& t, TapeBind& wb, TapeBind&) {
    Var err = t.sub(wb["w"], t.constant(Tensor({2}, {tgt0, tgt1})));
    return t.scale(t.sum(t.mul(err, err)), 0.5);
  };

  UnrollConfig cfg;
  cfg.eta = 1e-3;
  cfg.mode = HypergradMode::FiniteDiffHvp;
  const GradList g = unrolled_outer_grad(w, m, train, val, cfg);
  REQUIRE(g.size() == 1);
  const double exact0 = a0 * (a0 * 0.5 - tgt0);
  const double exact1 = a1 * (a1 * -0.25 - tgt1);
  const double dot = g[0].second[0] * exact0 + g[0].second[1] * exact1;
  const double n1 = std::hypot(g[0].second[0], g[0].second[1]);
  const double n2 = std::hypot(exact0, exact1);
  REQUIRE(n1 > 0.0);
  CHECK(dot / (n1 * n2) > 0.9);

  // first-order mode has no path from m to the fixed validation loss here
  UnrollConfig fo = cfg;
  fo.mode = HypergradMode::FirstOrder;
  const GradList g0 = unrolled_outer_grad(w, m, train, val, fo);
  CHECK(g0[0].second[0] == 0.0);
  CHECK(g0[0].second[1] == 0.0);
}

TEST_CASE("dynamic adjacency: zero embedding under sigmoid gives 0.5 on the mask") {
  const AdjacencyMatrix mask = ordering_to_mask(DenseOrdering::from_label("DVAL"));
  const AdjacencyMatrix m = dynamic_adjacency(Tensor({4, 6}), mask, AttentionMode::Sigmoid);
  for (int j = 0; j < 4; ++j) {
    for (int k = 0; k < 4; ++k) {
      if (mask.at(j, k) == 1.0) {
        CHECK(m.at(j, k) == 0.5);
      } else {
        CHECK(m.at(j, k) == 0.0);
      }
    }
  }
}

TEST_CASE("dynamic adjacency: orthogonal embeddings under cosine give zero weights") {
  Tensor u({4, 4});
  for (int k = 0; k < 4; ++k) u.at(k, k) = 2.0;  // orthogonal rows
  const AdjacencyMatrix mask = ordering_to_mask(DenseOrdering::from_label("DVAL"));
  const AdjacencyMatrix m = dynamic_adjacency(u, mask, AttentionMode::Cosine);
  for (std::size_t i = 0; i < m.w.size(); ++i) CHECK(m.w[i] == 0.0);
}

TEST_CASE("dynamic adjacency always yields DAGs over a random sweep") {
  const AdjacencyMatrix mask = ordering_to_mask(DenseOrdering::from_label("DAVL"));
  Rng rng(321);
  for (int i = 0; i < 1000; ++i) {
    Tensor u({4, 6});
    for (std::size_t k = 0; k < u.numel(); ++k) u[k] = rng.normal();
    const AdjacencyMatrix m =
        dynamic_adjacency(u, mask, i % 2 == 0 ? AttentionMode::Sigmoid : AttentionMode::Cosine);
    CHECK(is_dag(m, 0.0).has_value());
    for (int j = 0; j < 4; ++j) {
      for (int k = 0; k < 4; ++k) {
        if (mask.at(j, k) == 0.0) CHECK(m.at(j, k) == 0.0);
      }
    }
  }
}

TEST_CASE("masked learner stays inside the dense mask and is deterministic") {
  TinyWorld w = tiny_world();
  const AdjacencyMatrix mask = ordering_to_mask(DenseOrdering::from_label("DVAL"));
  UnrollConfig ucfg;
  ucfg.period = 40;
  TrainConfig tcfg;
  tcfg.steps = 60;
  tcfg.batch = 4;
  tcfg.lr = 3e-3;
  tcfg.seed = 5;
  tcfg.val_every = 0;
  tcfg.curve_every = 0;

  ScrModel m1(tiny_pipe(), 9);
  GenericResult r1 = learn_generic_masked(m1, w.corpus, w.splits, mask, Tensor({4, 4}, 0.5),
                                          ucfg, tcfg);
  REQUIRE(r1.ok);
  CHECK(is_dag(r1.binarized, 0.0).has_value());
  for (int j = 0; j < 4; ++j) {
    for (int k = 0; k < 4; ++k) {
      if (mask.at(j, k) == 0.0) {
        CHECK(r1.continuous.at(j, k) == 0.0);
        CHECK(r1.binarized.at(j, k) == 0.0);
      }
    }
  }
  CHECK(r1.repair_log.empty());

  ScrModel m2(tiny_pipe(), 9);
  GenericResult r2 = learn_generic_masked(m2, w.corpus, w.splits, mask, Tensor({4, 4}, 0.5),
                                          ucfg, tcfg);
  REQUIRE(r2.ok);
  CHECK(r1.continuous.w == r2.continuous.w);
  CHECK(r1.curves.final_val == r2.curves.final_val);

  AdjacencyMatrix cyc(4);
  cyc.at(0, 1) = 1.0;
  cyc.at(1, 0) = 1.0;
  CHECK_THROWS(learn_generic_masked(m1, w.corpus, w.splits, cyc, Tensor({4, 4}, 0.5), ucfg, tcfg));
}

TEST_CASE("an all-ones masked matrix reproduces the dense mask") {
  TinyWorld w = tiny_world(40);
  const AdjacencyMatrix mask = ordering_to_mask(DenseOrdering::from_label("DVAL"));
  UnrollConfig ucfg;
  TrainConfig tcfg;
  tcfg.steps = 0;
  tcfg.val_every = 0;
  tcfg.curve_every = 0;
  ScrModel model(tiny_pipe(), 3);
  GenericResult r = learn_generic_masked(model, w.corpus, w.splits, mask, Tensor({4, 4}, 1.0),
                                         ucfg, tcfg);
  REQUIRE(r.ok);
  CHECK(r.continuous == mask);
  CHECK(r.binarized == mask);
}

TEST_CASE("unrolled learner with the penalty emits a DAG after binarization") {
  TinyWorld w = tiny_world();
  UnrollConfig ucfg;
  ucfg.period = 30;              // compressed schedule for the test
  ucfg.dag_lr_init = 5e-3;
  TrainConfig tcfg;
  tcfg.steps = 90;
  tcfg.batch = 4;
  tcfg.lr = 3e-3;
  tcfg.seed = 7;
  tcfg.val_every = 0;
  tcfg.curve_every = 0;
  ScrModel model(tiny_pipe(), 13);
  GenericResult r = learn_generic_unrolled(model, w.corpus, w.splits, Tensor({4, 4}, 0.5), ucfg,
                                           tcfg);
  REQUIRE(r.ok);
  CHECK(is_dag(r.binarized, 0.0).has_value());
  REQUIRE(r.schedule.size() == 3);
  CHECK(r.schedule[0].lambda_dag == 10.0);
  CHECK(r.schedule[1].lambda_dag == 100.0);
  CHECK(r.schedule[2].lambda_dag == 1000.0);
  CHECK(r.schedule[1].dag_lr == 2.5e-3);
  // continuous entries stay inside the clamped box
  for (double v : r.continuous.w) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("training aborts cleanly when parameters go non-finite") {
  TinyWorld w = tiny_world(40);
  ScrModel model(tiny_pipe(), 21);
  model.params().entry(0).value[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.steps = 5;
  cfg.batch = 2;
  TrainOutcome out = train_fixed(model, w.corpus, w.splits, static_adjacency(AdjacencyMatrix(4)),
                                 cfg);
  CHECK(!out.ok);
  CHECK(out.steps_done == 0);
  CHECK(out.error.find("non-finite") != std::string::npos);
}

TEST_CASE("retrain_fixed rejects cyclic static structures") {
  TinyWorld w = tiny_world(40);
  ScrModel model(tiny_pipe(), 22);
  AdjacencyMatrix cyc(4);
  cyc.at(0, 1) = 1.0;
  cyc.at(1, 0) = 1.0;
  TrainConfig cfg;
  cfg.steps = 1;
  CHECK_THROWS(retrain_fixed(model, w.corpus, w.splits, static_adjacency(cyc), cfg, &cyc));
}

TEST_CASE("exhaustive dense BO returns the argmin of its trace") {
  TinyWorld w = tiny_world(40);
  DenseBoSettings settings;
  settings.pipe = tiny_pipe();
  settings.inner.steps = 8;
  settings.inner.batch = 4;
  settings.inner.lr = 3e-3;
  settings.inner.val_every = 0;
  settings.inner.curve_every = 0;
  settings.iterations = 24;
  settings.seed = 31;
  const BoResult res = learn_dense_bo(w.corpus, w.splits, settings);
  REQUIRE(res.trace.size() == 24);
  double best = std::numeric_limits<double>::infinity();
  std::string best_label;
  for (const BoRecord& r : res.trace) {
    if (r.score < best) {
      best = r.score;
      best_label = r.ordering.label();
    }
  }
  CHECK(res.best.label() == best_label);
  CHECK(res.best_score == best);
}
