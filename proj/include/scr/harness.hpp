#pragma once

#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "scr/checkpoint.hpp"
#include "scr/io.hpp"
#include "scr/learners.hpp"
#include "scr/version.hpp"

namespace scr {

using Json = nlohmann::json;

inline const std::vector<std::string>& all_variants() {
  static const std::vector<std::string> v = {"independent",    "dense",
                                             "generic-reg",    "generic-masked",
                                             "dynamic-sigmoid", "dynamic-cosine"};
  return v;
}

struct RunConfig {
  std::uint64_t seed = 0;
  std::string variant = "independent";
  std::string dataset = "dataset.bin";
  std::string out = "runs";
  std::string structure;        // train-eval input; defaults per variant
  std::string dense_structure;  // masked/dynamic searches need the dense result
  int jobs = 1;
  bool supervised_val = false;

  PipelineConfig pipe;
  TrainConfig train;

  // generation
  int samples = 1000;
  SplitRatios ratios;
  double scm_symmetry = 1.0;
  double scm_coupling_scale = 1.0;
  std::uint64_t scm_seed = 7;

  // dense search
  int bo_iterations = 10;
  int bo_inner_steps = 5000;
  int bo_inner_batch = 8;
  double bo_inner_lr = 1e-3;

  // generic search
  UnrollConfig unroll;
  int search_steps = 5000;

  // approx experiment
  PolyTarget poly;
  ApproxConfig approx;
  int approx_seeds = 10;
};

namespace detail {
template <typename T>
void maybe(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}
}  // namespace detail

inline RunConfig config_from_json(const Json& j) {
  RunConfig c;
  detail::maybe(j, "seed", c.seed);
  detail::maybe(j, "variant", c.variant);
  detail::maybe(j, "dataset", c.dataset);
  detail::maybe(j, "out", c.out);
  detail::maybe(j, "structure", c.structure);
  detail::maybe(j, "dense_structure", c.dense_structure);
  detail::maybe(j, "jobs", c.jobs);
  detail::maybe(j, "supervised_val", c.supervised_val);

  detail::maybe(j, "grid", c.pipe.grid);
  detail::maybe(j, "embed_dim", c.pipe.embed_dim);
  detail::maybe(j, "enc_hidden", c.pipe.enc_hidden);
  detail::maybe(j, "dec_hidden", c.pipe.dec_hidden);
  detail::maybe(j, "conf_hidden", c.pipe.conf_hidden);
  detail::maybe(j, "feat_hidden", c.pipe.feat_hidden);
  detail::maybe(j, "feat_channels", c.pipe.feat_channels);
  detail::maybe(j, "shift_scale", c.pipe.shift_scale);
  detail::maybe(j, "lambda_f", c.pipe.lambda_f);
  detail::maybe(j, "lambda_p", c.pipe.lambda_p);
  detail::maybe(j, "use_perceptual", c.pipe.use_perceptual);

  detail::maybe(j, "steps", c.train.steps);
  detail::maybe(j, "batch", c.train.batch);
  detail::maybe(j, "lr", c.train.lr);
  detail::maybe(j, "val_every", c.train.val_every);
  detail::maybe(j, "curve_every", c.train.curve_every);

  detail::maybe(j, "samples", c.samples);
  if (j.contains("ratios")) {
    auto r = j.at("ratios");
    c.ratios.train = r.at(0).get<double>();
    c.ratios.val = r.at(1).get<double>();
    c.ratios.test = r.at(2).get<double>();
  }
  detail::maybe(j, "scm_symmetry", c.scm_symmetry);
  detail::maybe(j, "scm_coupling_scale", c.scm_coupling_scale);
  detail::maybe(j, "scm_seed", c.scm_seed);

  detail::maybe(j, "bo_iterations", c.bo_iterations);
  detail::maybe(j, "bo_inner_steps", c.bo_inner_steps);
  detail::maybe(j, "bo_inner_batch", c.bo_inner_batch);
  detail::maybe(j, "bo_inner_lr", c.bo_inner_lr);

  detail::maybe(j, "search_steps", c.search_steps);
  detail::maybe(j, "unroll_eta", c.unroll.eta);
  detail::maybe(j, "unroll_k", c.unroll.unroll_k);
  detail::maybe(j, "lambda_dag_init", c.unroll.lambda_init);
  detail::maybe(j, "lambda_dag_mult", c.unroll.lambda_mult);
  detail::maybe(j, "lambda_dag_period", c.unroll.period);
  detail::maybe(j, "dag_lr_init", c.unroll.dag_lr_init);
  detail::maybe(j, "dag_lr_mult", c.unroll.dag_lr_mult);
  detail::maybe(j, "binarize_tau", c.unroll.binarize_tau);
  detail::maybe(j, "m_init", c.unroll.m_init);
  if (j.contains("hypergrad") && j.at("hypergrad").get<std::string>() == "finite-diff") {
    c.unroll.mode = HypergradMode::FiniteDiffHvp;
  }

  detail::maybe(j, "poly_dim", c.poly.dim);
  detail::maybe(j, "poly_order", c.poly.order);
  detail::maybe(j, "poly_coupling", c.poly.coupling);
  detail::maybe(j, "poly_seed", c.poly.seed);
  detail::maybe(j, "approx_depth", c.approx.depth);
  detail::maybe(j, "approx_steps", c.approx.steps);
  detail::maybe(j, "approx_train_n", c.approx.train_n);
  detail::maybe(j, "approx_test_n", c.approx.test_n);
  detail::maybe(j, "approx_lr", c.approx.lr);
  detail::maybe(j, "approx_seeds", c.approx_seeds);
  return c;
}

inline RunConfig load_config_file(const std::string& path) {
  return config_from_json(Json::parse(read_file(path)));
}

// Canonical JSON of the effective config; nlohmann objects serialize with
// sorted keys, so the dump (and its hash) is deterministic.
inline Json config_to_json(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["variant"] = c.variant;
  j["dataset"] = c.dataset;
  j["out"] = c.out;
  j["structure"] = c.structure;
  j["dense_structure"] = c.dense_structure;
  j["jobs"] = c.jobs;
  j["supervised_val"] = c.supervised_val;
  j["grid"] = c.pipe.grid;
  j["embed_dim"] = c.pipe.embed_dim;
  j["enc_hidden"] = c.pipe.enc_hidden;
  j["dec_hidden"] = c.pipe.dec_hidden;
  j["conf_hidden"] = c.pipe.conf_hidden;
  j["feat_hidden"] = c.pipe.feat_hidden;
  j["feat_channels"] = c.pipe.feat_channels;
  j["shift_scale"] = c.pipe.shift_scale;
  j["lambda_f"] = c.pipe.lambda_f;
  j["lambda_p"] = c.pipe.lambda_p;
  j["use_perceptual"] = c.pipe.use_perceptual;
  j["steps"] = c.train.steps;
  j["batch"] = c.train.batch;
  j["lr"] = c.train.lr;
  j["val_every"] = c.train.val_every;
  j["curve_every"] = c.train.curve_every;
  j["samples"] = c.samples;
  j["ratios"] = {c.ratios.train, c.ratios.val, c.ratios.test};
  j["scm_symmetry"] = c.scm_symmetry;
  j["scm_coupling_scale"] = c.scm_coupling_scale;
  j["scm_seed"] = c.scm_seed;
  j["bo_iterations"] = c.bo_iterations;
  j["bo_inner_steps"] = c.bo_inner_steps;
  j["bo_inner_batch"] = c.bo_inner_batch;
  j["bo_inner_lr"] = c.bo_inner_lr;
  j["search_steps"] = c.search_steps;
  j["unroll_eta"] = c.unroll.eta;
  j["unroll_k"] = c.unroll.unroll_k;
  j["lambda_dag_init"] = c.unroll.lambda_init;
  j["lambda_dag_mult"] = c.unroll.lambda_mult;
  j["lambda_dag_period"] = c.unroll.period;
  j["dag_lr_init"] = c.unroll.dag_lr_init;
  j["dag_lr_mult"] = c.unroll.dag_lr_mult;
  j["binarize_tau"] = c.unroll.binarize_tau;
  j["m_init"] = c.unroll.m_init;
  j["hypergrad"] = c.unroll.mode == HypergradMode::FiniteDiffHvp ? "finite-diff" : "first-order";
  j["poly_dim"] = c.poly.dim;
  j["poly_order"] = c.poly.order;
  j["poly_coupling"] = c.poly.coupling;
  j["poly_seed"] = c.poly.seed;
  j["approx_depth"] = c.approx.depth;
  j["approx_steps"] = c.approx.steps;
  j["approx_train_n"] = c.approx.train_n;
  j["approx_test_n"] = c.approx.test_n;
  j["approx_lr"] = c.approx.lr;
  j["approx_seeds"] = c.approx_seeds;
  return j;
}

inline std::string run_hash(const RunConfig& c) { return config_hash(config_to_json(c).dump()); }

inline std::string run_dir(const RunConfig& c) {
  return (std::filesystem::path(c.out) / run_hash(c)).string();
}

inline Json provenance(const RunConfig& c) {
  Json j;
  j["config_hash"] = run_hash(c);
  j["seed"] = c.seed;
  j["version"] = kVersion;
  return j;
}

// ---- structure artifacts ----

inline Json adjacency_json(const AdjacencyMatrix& m) {
  Json rows = Json::array();
  for (int j = 0; j < m.n; ++j) {
    Json row = Json::array();
    for (int k = 0; k < m.n; ++k) row.push_back(m.at(j, k));
    rows.push_back(row);
  }
  return rows;
}

inline AdjacencyMatrix adjacency_from_json(const Json& j) {
  AdjacencyMatrix m(static_cast<int>(j.size()));
  for (int r = 0; r < m.n; ++r) {
    for (int c = 0; c < m.n; ++c) m.at(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

struct StructureArtifact {
  std::string variant;
  std::string ordering;  // dense orderings only
  AdjacencyMatrix mask{4};
  AdjacencyMatrix continuous{4};
  bool has_continuous = false;
  std::string attention;  // "sigmoid" / "cosine" for dynamic variants
};

inline std::string structure_to_string(const StructureArtifact& s, const RunConfig& cfg) {
  Json j = provenance(cfg);
  j["variant"] = s.variant;
  if (!s.ordering.empty()) j["ordering"] = s.ordering;
  j["mask"] = adjacency_json(s.mask);
  if (s.has_continuous) j["continuous"] = adjacency_json(s.continuous);
  if (!s.attention.empty()) j["attention"] = s.attention;
  return j.dump(2) + "\n";
}

inline StructureArtifact structure_from_file(const std::string& path) {
  const Json j = Json::parse(read_file(path));
  StructureArtifact s;
  s.variant = j.at("variant").get<std::string>();
  if (j.contains("ordering")) s.ordering = j.at("ordering").get<std::string>();
  s.mask = adjacency_from_json(j.at("mask"));
  if (j.contains("continuous")) {
    s.continuous = adjacency_from_json(j.at("continuous"));
    s.has_continuous = true;
  }
  if (j.contains("attention")) s.attention = j.at("attention").get<std::string>();
  return s;
}

inline std::string default_structure_path(const RunConfig& c, const std::string& variant) {
  return (std::filesystem::path(c.out) / ("structure_" + variant + ".json")).string();
}

// ---- cmd: generate ----

inline ScmConfig scm_config(const RunConfig& c) {
  ScmConfig s;
  s.grid = c.pipe.grid;
  s.scm_seed = c.scm_seed;
  s.symmetry = c.scm_symmetry;
  s.coupling_scale = c.scm_coupling_scale;
  s.gt_dag = default_gt_dag();
  return s;
}

inline int cmd_generate(const RunConfig& cfg) {
  if (cfg.samples <= 0) throw std::invalid_argument("generate: samples must be positive");
  const Corpus corpus = generate_corpus(scm_config(cfg), cfg.samples, cfg.seed);
  const Splits splits = make_splits(cfg.samples, cfg.ratios, cfg.seed);
  {
    std::ostringstream os;
    save_corpus(os, corpus);
    atomic_write_file(cfg.dataset, os.str());
  }
  {
    std::ostringstream os;
    os << "scrlab-splits v1 " << provenance(cfg).dump() << "\n";
    auto emit = [&](const char* name, const std::vector<int>& idx) {
      os << name;
      for (int i : idx) os << ' ' << i;
      os << "\n";
    };
    emit("train", splits.train);
    emit("val", splits.val);
    emit("test", splits.test);
    atomic_write_file(cfg.dataset + ".splits", os.str());
  }
  Json manifest = provenance(cfg);
  manifest["samples"] = cfg.samples;
  manifest["grid"] = cfg.pipe.grid;
  manifest["gt_dag"] = adjacency_json(corpus.scm.gt_dag);
  manifest["split_sizes"] = {splits.train.size(), splits.val.size(), splits.test.size()};
  atomic_write_file(cfg.dataset + ".json", manifest.dump(2) + "\n");
  std::cout << "generate: wrote " << cfg.samples << " samples to " << cfg.dataset << " (splits "
            << splits.train.size() << "/" << splits.val.size() << "/" << splits.test.size()
            << ")\n";
  return 0;
}

inline Splits load_splits_file(const std::string& path) {
  std::istringstream is(read_file(path));
  std::string line;
  std::getline(is, line);
  if (line.rfind("scrlab-splits v1", 0) != 0) {
    throw std::runtime_error("bad splits header in " + path);
  }
  Splits s;
  auto parse = [&](const char* name, std::vector<int>& out) {
    std::getline(is, line);
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw != name) throw std::runtime_error("bad splits section " + kw);
    int v;
    while (ls >> v) out.push_back(v);
  };
  parse("train", s.train);
  parse("val", s.val);
  parse("test", s.test);
  return s;
}

struct LoadedData {
  Corpus corpus;
  Splits splits;
};

inline LoadedData load_data(const RunConfig& cfg) {
  LoadedData d;
  d.corpus = load_corpus_file(cfg.dataset);
  d.splits = load_splits_file(cfg.dataset + ".splits");
  return d;
}

// ---- cmd: search ----

inline int cmd_search(const RunConfig& cfg) {
  const LoadedData data = load_data(cfg);
  const std::string dir = run_dir(cfg);
  StructureArtifact art;
  art.variant = cfg.variant;

  if (cfg.variant == "independent") {
    art.mask = AdjacencyMatrix(4);  // no edges
  } else if (cfg.variant == "dense") {
    DenseBoSettings settings;
    settings.pipe = cfg.pipe;
    settings.inner = cfg.train;
    settings.inner.steps = cfg.bo_inner_steps;
    settings.inner.batch = cfg.bo_inner_batch;
    settings.inner.lr = cfg.bo_inner_lr;
    settings.iterations = cfg.bo_iterations;
    settings.supervised_val = cfg.supervised_val;
    settings.seed = cfg.seed;
    const BoResult bo = learn_dense_bo(data.corpus, data.splits, settings);
    art.ordering = bo.best.label();
    art.mask = ordering_to_mask(bo.best);
    std::ostringstream trace;
    for (const BoRecord& r : bo.trace) {
      Json j;
      j["iteration"] = r.iteration;
      j["ordering"] = r.ordering.label();
      if (std::isfinite(r.score)) {
        j["score"] = r.score;
      } else {
        j["score"] = nullptr;
        j["failed"] = true;
      }
      j["lambda"] = r.lambda;
      j["ei"] = r.ei;
      j["acquired"] = r.acquired;
      trace << j.dump() << "\n";
    }
    atomic_write_file(dir + "/bo_trace.jsonl", trace.str());
  } else if (cfg.variant == "generic-reg" || cfg.variant == "generic-masked") {
    ScrModel model(cfg.pipe, derive_seed(cfg.seed, "search"));
    TrainConfig tcfg = cfg.train;
    tcfg.steps = cfg.search_steps;
    tcfg.seed = derive_seed(cfg.seed, "search-train");
    Tensor m0({4, 4}, cfg.unroll.m_init);
    GenericResult res;
    if (cfg.variant == "generic-reg") {
      res = learn_generic_unrolled(model, data.corpus, data.splits, m0, cfg.unroll, tcfg);
    } else {
      const std::string dense_path =
          cfg.dense_structure.empty() ? default_structure_path(cfg, "dense") : cfg.dense_structure;
      if (!std::filesystem::exists(dense_path)) {
        throw std::runtime_error("generic-masked search needs a dense structure file: " +
                                 dense_path);
      }
      const StructureArtifact dense = structure_from_file(dense_path);
      res = learn_generic_masked(model, data.corpus, data.splits, dense.mask, m0, cfg.unroll,
                                 tcfg);
    }
    if (!res.ok) throw std::runtime_error("generic search aborted: " + res.error);
    art.mask = res.binarized;
    art.continuous = res.continuous;
    art.has_continuous = true;
    std::ostringstream trace;
    for (const ScheduleEntry& e : res.schedule) {
      Json j;
      j["step"] = e.step;
      j["lambda_dag"] = e.lambda_dag;
      j["dag_lr"] = e.dag_lr;
      trace << j.dump() << "\n";
    }
    for (const std::string& r : res.repair_log) {
      Json j;
      j["repair"] = r;
      trace << j.dump() << "\n";
    }
    atomic_write_file(dir + "/schedule_trace.jsonl", trace.str());
  } else if (cfg.variant == "dynamic-sigmoid" || cfg.variant == "dynamic-cosine") {
    const std::string dense_path =
        cfg.dense_structure.empty() ? default_structure_path(cfg, "dense") : cfg.dense_structure;
    if (!std::filesystem::exists(dense_path)) {
      throw std::runtime_error("dynamic search needs a dense structure file: " + dense_path);
    }
    const StructureArtifact dense = structure_from_file(dense_path);
    art.mask = dense.mask;
    art.attention = cfg.variant == "dynamic-sigmoid" ? "sigmoid" : "cosine";
  } else {
    throw std::invalid_argument("unknown variant: " + cfg.variant);
  }

  const std::string body = structure_to_string(art, cfg);
  atomic_write_file(dir + "/structure.json", body);
  atomic_write_file(default_structure_path(cfg, cfg.variant), body);
  std::cout << "search " << cfg.variant << ": mask edges=" << art.mask.edge_count()
            << (art.ordering.empty() ? "" : " ordering=" + art.ordering) << " -> " << dir
            << "/structure.json\n";
  return 0;
}

// ---- cmd: train-eval ----

inline AdjacencyFn adjacency_for(const StructureArtifact& art) {
  if (art.attention == "sigmoid") return dynamic_adjacency_fn(art.mask, AttentionMode::Sigmoid);
  if (art.attention == "cosine") return dynamic_adjacency_fn(art.mask, AttentionMode::Cosine);
  return static_adjacency(art.mask);
}

struct TrainEvalRow {
  std::string variant;
  std::uint64_t seed = 0;
  EvalMetrics test;
  double final_val = 0.0;
  StructureRecovery recovery;
  TrainCurves curves;
};

inline TrainEvalRow run_train_eval_variant(const RunConfig& cfg, const LoadedData& data,
                                           const std::string& variant) {
  StructureArtifact art;
  if (variant == "independent") {
    art.variant = variant;
    art.mask = AdjacencyMatrix(4);
  } else {
    const std::string path =
        cfg.structure.empty() ? default_structure_path(cfg, variant) : cfg.structure;
    if (!std::filesystem::exists(path)) {
      throw std::runtime_error("train-eval needs a structure file for variant " + variant + ": " +
                               path);
    }
    art = structure_from_file(path);
  }
  const AdjacencyFn adj = adjacency_for(art);
  ScrModel model(cfg.pipe, derive_seed(cfg.seed, "retrain:" + variant));
  TrainConfig tcfg = cfg.train;
  tcfg.seed = derive_seed(cfg.seed, "retrain-batches:" + variant);
  const bool dynamic = !art.attention.empty();
  RetrainResult res = retrain_fixed(model, data.corpus, data.splits, adj, tcfg,
                                    dynamic ? nullptr : &art.mask);
  if (!res.outcome.ok) {
    throw std::runtime_error("train-eval " + variant + " aborted: " + res.outcome.error);
  }
  TrainEvalRow row;
  row.variant = variant;
  row.seed = cfg.seed;
  row.test = res.test;
  row.final_val = res.outcome.curves.final_val;
  row.recovery = structure_recovery(binarize(art.mask, 0.0), data.corpus.scm.gt_dag);
  row.curves = res.outcome.curves;
  return row;
}

inline int cmd_train_eval(const RunConfig& cfg) {
  const LoadedData data = load_data(cfg);
  std::vector<std::string> variants;
  if (cfg.variant == "all") {
    variants = all_variants();
  } else {
    variants.push_back(cfg.variant);
  }

  std::vector<TrainEvalRow> rows(variants.size());
  const int jobs = std::max(1, cfg.jobs);
  std::vector<std::string> errors(variants.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= variants.size()) return;
        i = next++;
      }
      try {
        rows[i] = run_train_eval_variant(cfg, data, variants[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (jobs == 1 || variants.size() == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min<int>(jobs, static_cast<int>(variants.size())); ++t) {
      pool.emplace_back(worker);
    }
    for (auto& th : pool) th.join();
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw std::runtime_error(e);
  }

  const std::string dir = run_dir(cfg);
  const Json prov = provenance(cfg);
  std::ostringstream metrics;
  metrics << "# " << prov.dump() << "\n";
  metrics << "run_id,variant,seed,side,mad,shd,precision,recall,final_val\n";
  std::ostringstream curves;
  curves << "# " << prov.dump() << "\n";
  curves << "variant,split,step,loss\n";
  Json runj = provenance(cfg);
  runj["results"] = Json::array();
  for (const TrainEvalRow& r : rows) {
    metrics << run_hash(cfg) << ',' << r.variant << ',' << r.seed << ','
            << fmt_double(r.test.side_mean) << ',' << fmt_double(r.test.mad_mean) << ','
            << r.recovery.shd << ',' << fmt_double(r.recovery.precision) << ','
            << fmt_double(r.recovery.recall) << ',' << fmt_double(r.final_val) << "\n";
    for (const auto& [step, loss] : r.curves.train) {
      curves << r.variant << ",train," << step << ',' << fmt_double(loss) << "\n";
    }
    for (const auto& [step, loss] : r.curves.val) {
      curves << r.variant << ",val," << step << ',' << fmt_double(loss) << "\n";
    }
    Json jr;
    jr["variant"] = r.variant;
    jr["side"] = r.test.side_mean;
    jr["mad"] = r.test.mad_mean;
    jr["final_val"] = r.final_val;
    jr["shd"] = r.recovery.shd;
    runj["results"].push_back(jr);
    std::cout << "train-eval " << r.variant << ": side=" << r.test.side_mean
              << " mad=" << r.test.mad_mean << " val=" << r.final_val << "\n";
  }
  atomic_write_file(dir + "/metrics.csv", metrics.str());
  atomic_write_file(dir + "/curves.csv", curves.str());
  atomic_write_file(dir + "/run.json", runj.dump(2) + "\n");
  return 0;
}

// ---- cmd: approx ----

inline int cmd_approx(const RunConfig& cfg) {
  const std::string dir = run_dir(cfg);
  std::vector<ApproxResult> results(static_cast<std::size_t>(cfg.approx_seeds));
  const int jobs = std::max(1, cfg.jobs);
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= results.size()) return;
        i = next++;
      }
      ApproxConfig ac = cfg.approx;
      ac.seed = derive_seed(cfg.seed, "approx:" + std::to_string(i));
      results[i] = approx_experiment(cfg.poly, ac);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  int wins = 0;
  std::ostringstream csv;
  csv << "# " << provenance(cfg).dump() << "\n";
  csv << "seed_index,mse_independent,mse_composed,composed_wins\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const bool win = results[i].mse_composed < results[i].mse_independent;
    wins += win ? 1 : 0;
    csv << i << ',' << fmt_double(results[i].mse_independent) << ','
        << fmt_double(results[i].mse_composed) << ',' << (win ? 1 : 0) << "\n";
  }
  const double rate = static_cast<double>(wins) / static_cast<double>(results.size());
  csv << "# win_rate " << fmt_double(rate) << "\n";
  atomic_write_file(dir + "/approx.csv", csv.str());
  std::cout << "approx: composed wins " << wins << "/" << results.size() << " (win rate " << rate
            << ")\n";
  return 0;
}

}  // namespace scr
