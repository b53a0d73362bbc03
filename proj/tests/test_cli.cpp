#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "scr/harness.hpp"
#include "scr/io.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("scrlab-test-" + std::to_string(::getpid()) + "-" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string operator/(const std::string& p) const { return (path / p).string(); }
};

int run(const std::string& args, std::string* output = nullptr) {
  const TempDir* unused = nullptr;
  (void)unused;
  static int log_id = 0;
  const std::string log =
      (fs::temp_directory_path() / ("scrlab-cli-log-" + std::to_string(::getpid()) + "-" +
                                    std::to_string(log_id++)))
          .string();
  const std::string cmd = std::string(SCRLAB_BIN) + " " + args + " > " + log + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (output) {
    std::ifstream is(log);
    std::ostringstream os;
    os << is.rdbuf();
    *output = os.str();
  }
  fs::remove(log);
  return rc == 0 ? 0 : 1;
}

std::string tiny_config(const TempDir& dir, const std::string& dataset) {
  scr::Json j;
  j["grid"] = 8;
  j["embed_dim"] = 6;
  j["enc_hidden"] = 10;
  j["dec_hidden"] = 10;
  j["conf_hidden"] = 8;
  j["feat_hidden"] = 8;
  j["samples"] = 50;
  j["steps"] = 30;
  j["batch"] = 4;
  j["lr"] = 0.003;
  j["val_every"] = 10;
  j["curve_every"] = 10;
  j["bo_inner_steps"] = 6;
  j["bo_iterations"] = 4;
  j["search_steps"] = 20;
  j["dataset"] = dataset;
  j["out"] = dir / "runs";
  const std::string path = dir / "config.json";
  scr::atomic_write_file(path, j.dump(2));
  return path;
}

}  // namespace

TEST_CASE("generate is idempotent for a fixed seed") {
  TempDir dir;
  const std::string cfg = tiny_config(dir, dir / "a.bin");
  REQUIRE(run("generate --config " + cfg + " --seed 7") == 0);
  const std::string first = scr::read_file(dir / "a.bin");
  REQUIRE(run("generate --config " + cfg + " --seed 7") == 0);
  CHECK(scr::read_file(dir / "a.bin") == first);

  // different seed changes the bytes
  REQUIRE(run("generate --config " + cfg + " --seed 8") == 0);
  CHECK(scr::read_file(dir / "a.bin") != first);
}

TEST_CASE("generate applies the default 8:1:1 split and rejects zero samples") {
  TempDir dir;
  const std::string cfg = tiny_config(dir, dir / "b.bin");
  std::string out;
  REQUIRE(run("generate --config " + cfg + " --seed 1 --samples 100", &out) == 0);
  CHECK(out.find("80/10/10") != std::string::npos);
  CHECK(run("generate --config " + cfg + " --seed 1 --samples 0", &out) != 0);
}

TEST_CASE("independent search emits an all-zero structure") {
  TempDir dir;
  const std::string cfg = tiny_config(dir, dir / "c.bin");
  REQUIRE(run("generate --config " + cfg + " --seed 2") == 0);
  REQUIRE(run("search --config " + cfg + " --seed 2 --variant independent") == 0);
  const scr::StructureArtifact art =
      scr::structure_from_file((fs::path(dir / "runs") / "structure_independent.json").string());
  CHECK(art.variant == "independent");
  CHECK(art.mask.edge_count() == 0);
}

TEST_CASE("masked search requires a prior dense structure file") {
  TempDir dir;
  const std::string cfg = tiny_config(dir, dir / "d.bin");
  REQUIRE(run("generate --config " + cfg + " --seed 3") == 0);
  std::string out;
  CHECK(run("search --config " + cfg + " --seed 3 --variant generic-masked", &out) != 0);
  CHECK(out.find("dense structure") != std::string::npos);
}

TEST_CASE("search then train-eval produces deterministic metrics") {
  TempDir dir;
  const std::string cfg = tiny_config(dir, dir / "e.bin");
  REQUIRE(run("generate --config " + cfg + " --seed 4") == 0);
  REQUIRE(run("search --config " + cfg + " --seed 4 --variant dense") == 0);
  std::string out;
  REQUIRE(run("train-eval --config " + cfg + " --seed 4 --variant dense", &out) == 0);

  // locate the metrics file under runs/<hash>/
  scr::RunConfig rc = scr::load_config_file(cfg);
  rc.seed = 4;
  rc.variant = "dense";
  const std::string metrics_path = scr::run_dir(rc) + "/metrics.csv";
  const std::string first = scr::read_file(metrics_path);
  CHECK(first.find("run_id,variant,seed") != std::string::npos);
  CHECK(first.find(scr::run_hash(rc)) != std::string::npos);

  REQUIRE(run("train-eval --config " + cfg + " --seed 4 --variant dense") == 0);
  CHECK(scr::read_file(metrics_path) == first);

  // curves exist and carry the provenance header
  const std::string curves = scr::read_file(scr::run_dir(rc) + "/curves.csv");
  CHECK(curves.find("config_hash") != std::string::npos);
  CHECK(curves.find("val") != std::string::npos);

  // BO trace exists with one JSON line per evaluation
  scr::RunConfig sc = scr::load_config_file(cfg);
  sc.seed = 4;
  sc.variant = "dense";
  const std::string trace = scr::read_file(scr::run_dir(sc) + "/bo_trace.jsonl");
  int lines = 0;
  for (char ch : trace) {
    if (ch == '\n') ++lines;
  }
  CHECK(lines == 4);  // bo_iterations
}

TEST_CASE("train-eval on an unknown variant fails cleanly") {
  TempDir dir;
  const std::string cfg = tiny_config(dir, dir / "f.bin");
  REQUIRE(run("generate --config " + cfg + " --seed 5") == 0);
  std::string out;
  CHECK(run("train-eval --config " + cfg + " --seed 5 --variant bogus", &out) != 0);
  CHECK(run("train-eval --config " + cfg + " --seed 5 --variant dynamic-cosine", &out) != 0);
  CHECK(out.find("structure") != std::string::npos);
}

TEST_CASE("approx subcommand reports paired rows and a win rate") {
  TempDir dir;
  scr::Json j;
  j["out"] = dir / "runs";
  j["approx_steps"] = 150;
  j["approx_train_n"] = 96;
  j["approx_test_n"] = 48;
  j["approx_seeds"] = 3;
  const std::string cfg = dir / "approx.json";
  scr::atomic_write_file(cfg, j.dump());
  std::string out;
  REQUIRE(run("approx --config " + cfg + " --seed 6", &out) == 0);
  CHECK(out.find("composed wins") != std::string::npos);

  scr::RunConfig rc = scr::load_config_file(cfg);
  rc.seed = 6;
  const std::string csv = scr::read_file(scr::run_dir(rc) + "/approx.csv");
  CHECK(csv.find("mse_independent") != std::string::npos);
  CHECK(csv.find("win_rate") != std::string::npos);
}
