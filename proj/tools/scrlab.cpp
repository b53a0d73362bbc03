#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "scr/harness.hpp"

namespace {

struct CliOverrides {
  std::string config_path;
  bool has_seed = false;
  std::uint64_t seed = 0;
  std::string variant, dataset, out, structure, dense_structure;
  int jobs = 0;
  bool supervised_val = false;
};

void add_common(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--seed", o.seed, "run seed")->each([&o](const std::string&) { o.has_seed = true; });
  cmd->add_option("--variant", o.variant,
                  "independent|dense|generic-reg|generic-masked|dynamic-sigmoid|dynamic-cosine|all");
  cmd->add_option("--dataset", o.dataset, "dataset file path");
  cmd->add_option("--out", o.out, "output directory (runs/<config-hash>/...)");
  cmd->add_option("--structure", o.structure, "structure artifact for train-eval");
  cmd->add_option("--dense-structure", o.dense_structure,
                  "dense structure artifact for masked/dynamic searches");
  cmd->add_option("--jobs", o.jobs, "parallel independent runs");
  cmd->add_flag("--supervised-val", o.supervised_val,
                "score BO candidates with ground-truth depth error instead of validation loss");
}

scr::RunConfig resolve(const CliOverrides& o) {
  scr::RunConfig cfg;
  if (!o.config_path.empty()) cfg = scr::load_config_file(o.config_path);
  if (o.has_seed) cfg.seed = o.seed;
  if (!o.variant.empty()) cfg.variant = o.variant;
  if (!o.dataset.empty()) cfg.dataset = o.dataset;
  if (!o.out.empty()) cfg.out = o.out;
  if (!o.structure.empty()) cfg.structure = o.structure;
  if (!o.dense_structure.empty()) cfg.dense_structure = o.dense_structure;
  if (o.jobs > 0) cfg.jobs = o.jobs;
  if (o.supervised_val) cfg.supervised_val = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scrlab: causal-ordering laboratory for a differentiable reconstruction pipeline"};
  app.require_subcommand(1);

  CliOverrides gen_o, search_o, train_o, approx_o;
  CLI::App* gen = app.add_subcommand("generate", "sample a synthetic corpus and splits");
  int samples = -1;  // sentinel: keep the config value unless the flag is given
  gen->add_option("--samples", samples, "corpus size");
  add_common(gen, gen_o);
  CLI::App* search = app.add_subcommand("search", "learn a structure for the chosen variant");
  add_common(search, search_o);
  CLI::App* train = app.add_subcommand("train-eval", "retrain with a fixed structure and evaluate");
  add_common(train, train_o);
  CLI::App* approx =
      app.add_subcommand("approx", "capacity-matched function-approximation experiment");
  add_common(approx, approx_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      scr::RunConfig cfg = resolve(gen_o);
      if (samples >= 0) cfg.samples = samples;
      return scr::cmd_generate(cfg);
    }
    if (search->parsed()) return scr::cmd_search(resolve(search_o));
    if (train->parsed()) return scr::cmd_train_eval(resolve(train_o));
    if (approx->parsed()) return scr::cmd_approx(resolve(approx_o));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
