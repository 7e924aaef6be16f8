#include <catch2/catch.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gswe/checkpoint.hpp"
#include "gswe/dataset.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path log =
      fs::temp_directory_path() / ("gswe_cli_log_" + std::to_string(counter++));
  const std::string cmd =
      std::string(GSWE_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  r.output.assign(std::istreambuf_iterator<char>(in),
                  std::istreambuf_iterator<char>());
  fs::remove(log);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// Scratch directory rebuilt per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name)
      : dir(fs::temp_directory_path() / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& f) const {
    return (dir / f).string();
  }
};

}  // namespace

TEST_CASE("--help exits 0 on every subcommand", "[cli]") {
  CHECK(run_cli("--help").code == 0);
  for (const char* sub :
       {"gen", "train", "embed", "distance", "eval-nn", "eval-cv"}) {
    CliResult r = run_cli(std::string(sub) + " --help");
    INFO(sub);
    CHECK(r.code == 0);
    CHECK(r.output.find("--") != std::string::npos);
  }
}

TEST_CASE("unknown flags are a usage error", "[cli]") {
  CHECK(run_cli("gen --does-not-exist 3").code == 1);
  CHECK(run_cli("frobnicate").code == 1);
}

TEST_CASE("gen writes byte-identical files under a fixed seed", "[cli]") {
  Scratch s("gswe_cli_gen");
  CliResult r1 = run_cli("gen --task set-circles --seed 7 --n-sets 40 "
                         "--n-test 16 --out " + (s / "a"));
  REQUIRE(r1.code == 0);
  CHECK(r1.output.find("mean size") != std::string::npos);
  CliResult r2 = run_cli("gen --task set-circles --seed 7 --n-sets 40 "
                         "--n-test 16 --out " + (s / "b"));
  REQUIRE(r2.code == 0);
  CHECK(slurp(s / "a.train.jsonl") == slurp(s / "b.train.jsonl"));
  CHECK(slurp(s / "a.test.jsonl") == slurp(s / "b.test.jsonl"));
}

TEST_CASE("gen refuses equal radii", "[cli]") {
  Scratch s("gswe_cli_radii");
  CliResult r = run_cli("gen --radii 1.0 1.0 --out " + (s / "x"));
  CHECK(r.code != 0);
  CHECK(r.output.find("distinct") != std::string::npos);
}

TEST_CASE("gen refuses to overwrite without --force", "[cli]") {
  Scratch s("gswe_cli_force");
  REQUIRE(run_cli("gen --seed 1 --n-sets 4 --n-test 2 --out " + (s / "x"))
              .code == 0);
  CliResult r = run_cli("gen --seed 1 --n-sets 4 --n-test 2 --out " + (s / "x"));
  CHECK(r.code == 1);
  CHECK(r.output.find("--force") != std::string::npos);
  CHECK(run_cli("gen --seed 1 --n-sets 4 --n-test 2 --force --out " +
                (s / "x"))
            .code == 0);
}

TEST_CASE("train is reproducible and zero epochs keep the initialization",
          "[cli][slow]") {
  Scratch s("gswe_cli_train");
  REQUIRE(run_cli("gen --seed 3 --n-sets 24 --n-test 8 --out " + (s / "d"))
              .code == 0);
  const std::string data = s / "d.train.jsonl";
  const std::string base_flags =
      " --data " + data + " --seed 11 --epochs 2 --batch 8 --lr 1e-3";
  REQUIRE(run_cli("train --out " + (s / "m1.ckpt") + base_flags).code == 0);
  REQUIRE(run_cli("train --out " + (s / "m2.ckpt") + base_flags).code == 0);
  CHECK(slurp(s / "m1.ckpt") == slurp(s / "m2.ckpt"));
  CHECK(slurp(s / "m1.ckpt.loss.csv") == slurp(s / "m2.ckpt.loss.csv"));

  // Zero-epoch checkpoints carry the untouched initialization: the learning
  // rate cannot matter.
  REQUIRE(run_cli("train --out " + (s / "z1.ckpt") + " --data " + data +
                  " --seed 11 --epochs 0 --lr 1e-3")
              .code == 0);
  REQUIRE(run_cli("train --out " + (s / "z2.ckpt") + " --data " + data +
                  " --seed 11 --epochs 0 --lr 0.5")
              .code == 0);
  gswe::Checkpoint z1 = gswe::load_checkpoint(s / "z1.ckpt");
  gswe::Checkpoint z2 = gswe::load_checkpoint(s / "z2.ckpt");
  gswe::Checkpoint trained = gswe::load_checkpoint(s / "m1.ckpt");
  auto pz1 = z1.model.params();
  auto pz2 = z2.model.params();
  auto pt = trained.model.params();
  REQUIRE(pz1.size() == pz2.size());
  bool any_diff_from_trained = false;
  for (std::size_t i = 0; i < pz1.size(); ++i) {
    CHECK(pz1[i]->data() == pz2[i]->data());
    if (pz1[i]->data() != pt[i]->data()) any_diff_from_trained = true;
  }
  CHECK(any_diff_from_trained);
}

TEST_CASE("embed writes one row per set and distance of a file to itself is "
          "zero",
          "[cli][slow]") {
  Scratch s("gswe_cli_embed");
  REQUIRE(run_cli("gen --seed 5 --n-sets 12 --n-test 6 --out " + (s / "d"))
              .code == 0);
  const std::string data = s / "d.train.jsonl";
  REQUIRE(run_cli("train --out " + (s / "m.ckpt") + " --data " + data +
                  " --seed 2 --epochs 1 --batch 6")
              .code == 0);
  REQUIRE(run_cli("embed --ckpt " + (s / "m.ckpt") + " --data " + data +
                  " --out " + (s / "emb.txt"))
              .code == 0);
  const std::string emb = slurp(s / "emb.txt");
  const auto rows = std::count(emb.begin(), emb.end(), '\n');
  CHECK(rows == 12 + 1);  // header + one row per set

  CliResult r = run_cli("distance --ckpt " + (s / "m.ckpt") + " --set-a " +
                        data + " --set-b " + data + " --index-a 3 --index-b 3");
  REQUIRE(r.code == 0);
  CHECK(std::stod(r.output) == 0.0);

  CliResult rm = run_cli("distance --ckpt " + (s / "m.ckpt") + " --set-a " +
                         data + " --set-b " + data +
                         " --index-b 4 --max-gsw --max-steps 5");
  REQUIRE(rm.code == 0);
  CHECK(rm.output.find("max_gsw") != std::string::npos);
  CHECK(rm.output.find("theta") != std::string::npos);
}

TEST_CASE("eval-nn prints an accuracy and writes the result table",
          "[cli][slow]") {
  Scratch s("gswe_cli_eval");
  REQUIRE(run_cli("gen --seed 9 --n-sets 20 --n-test 10 --out " + (s / "d"))
              .code == 0);
  REQUIRE(run_cli("train --out " + (s / "m.ckpt") + " --data " +
                  (s / "d.train.jsonl") + " --seed 4 --epochs 1 --batch 10")
              .code == 0);
  CliResult r = run_cli("eval-nn --ckpt " + (s / "m.ckpt") + " --train " +
                        (s / "d.train.jsonl") + " --test " +
                        (s / "d.test.jsonl") + " --out " + (s / "nn.csv"));
  REQUIRE(r.code == 0);
  CHECK(r.output.find("nn_accuracy") != std::string::npos);
  const std::string csv = slurp(s / "nn.csv");
  CHECK(csv.find("config_hash,seed,metric,value") != std::string::npos);
  CHECK(csv.find("nn_accuracy") != std::string::npos);
}

TEST_CASE("embed emits a raw binary matrix on request", "[cli][slow]") {
  Scratch s("gswe_cli_binary");
  REQUIRE(run_cli("gen --seed 2 --n-sets 8 --n-test 4 --out " + (s / "d"))
              .code == 0);
  REQUIRE(run_cli("train --out " + (s / "m.ckpt") + " --data " +
                  (s / "d.train.jsonl") + " --seed 1 --epochs 0 -M 3")
              .code == 0);
  REQUIRE(run_cli("embed --format binary --ckpt " + (s / "m.ckpt") +
                  " --data " + (s / "d.test.jsonl") + " --out " +
                  (s / "e.bin"))
              .code == 0);
  const std::string blob = slurp(s / "e.bin");
  const auto header_end = blob.find('\n');
  REQUIRE(header_end != std::string::npos);
  // 4 rows of K*L*M doubles follow the JSON header line.
  CHECK(blob.size() - header_end - 1 == 4 * 3 * sizeof(double));
}

TEST_CASE("eval-cv reports a cross-validation accuracy table", "[cli][slow]") {
  Scratch s("gswe_cli_cv");
  REQUIRE(run_cli("gen --seed 6 --n-sets 24 --n-test 0 --out " + (s / "d"))
              .code == 0);
  CliResult r = run_cli("eval-cv --data " + (s / "d.train.jsonl") +
                        " --k 3 --seed 2 --head-epochs 2 --out " +
                        (s / "cv.csv"));
  REQUIRE(r.code == 0);
  CHECK(r.output.find("cv_accuracy") != std::string::npos);
  const std::string csv = slurp(s / "cv.csv");
  CHECK(csv.find("cv_accuracy_mean") != std::string::npos);
  CHECK(csv.find("cv_accuracy_fold2") != std::string::npos);
}

TEST_CASE("config files feed defaults and flags override them", "[cli]") {
  Scratch s("gswe_cli_config");
  {
    std::ofstream cfg(s / "cfg.ini");
    cfg << "[gen]\nseed=5\nn-sets=6\nn-test=3\n";
  }
  REQUIRE(run_cli("gen --config " + (s / "cfg.ini") + " --out " + (s / "a"))
              .code == 0);
  gswe::SetDataset a = gswe::load_pointsets(s / "a.train.jsonl");
  CHECK(a.sets.size() == 6);
  REQUIRE(run_cli("gen --config " + (s / "cfg.ini") + " --n-sets 9 --out " +
                  (s / "b"))
              .code == 0);
  gswe::SetDataset b = gswe::load_pointsets(s / "b.train.jsonl");
  CHECK(b.sets.size() == 9);
}

TEST_CASE("a diverging training run exits with the numerical code and no "
          "checkpoint",
          "[cli][slow]") {
  Scratch s("gswe_cli_nan");
  REQUIRE(run_cli("gen --seed 4 --n-sets 16 --n-test 0 --out " + (s / "d"))
              .code == 0);
  CliResult r = run_cli("train --data " + (s / "d.train.jsonl") + " --out " +
                        (s / "m.ckpt") +
                        " --epochs 50 --batch 8 --lr 1e18 --tau 1e-6");
  CHECK(r.code == 3);
  CHECK(r.output.find("batch") != std::string::npos);
  CHECK_FALSE(fs::exists(s / "m.ckpt"));
}

TEST_CASE("missing inputs map to the data-error exit code", "[cli]") {
  Scratch s("gswe_cli_missing");
  CliResult r = run_cli("train --data " + (s / "nope.jsonl") + " --out " +
                        (s / "m.ckpt"));
  CHECK(r.code == 2);
  CliResult r2 = run_cli("embed --ckpt " + (s / "nope.ckpt") + " --data " +
                         (s / "nope.jsonl") + " --out " + (s / "e.txt"));
  CHECK(r2.code == 2);
}
