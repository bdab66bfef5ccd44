#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#ifndef DPGN_CLI_PATH
#error "DPGN_CLI_PATH must point at the command-line binary"
#endif

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("tmp_tests") / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& rel) const { return (path / rel).string(); }
};

int run(const std::string& args, const std::string& log = "/dev/null") {
  std::string cmd = std::string(DPGN_CLI_PATH) + " " + args + " >" + log + " 2>&1";
  int status = std::system(cmd.c_str());
  if (status < 0) return -1;
#ifdef _WIN32
  return status;
#else
  return WEXITSTATUS(status);
#endif
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_graph(const std::string& path) {
  std::ofstream out(path);
  out << R"({"n_nodes": 6, "edges": [[0,1],[1,2],[2,3],[3,4],[4,5],[0,5],[1,4]]})";
}

}  // namespace

TEST_CASE("cli rejects unknown subcommands and bad flags with exit 2") {
  CHECK(run("definitely-not-a-command") == 2);
  CHECK(run("train") == 2);                      // missing required --data
  CHECK(run("simulate --graph missing.json --steps -3") == 2);
}

TEST_CASE("simulate writes a trajectory and a summary") {
  TempDir dir("cli_sim");
  write_graph(dir.file("graph.json"));
  int rc = run("simulate --graph " + dir.file("graph.json") +
               " --eq diffusion --alpha 0.1 --steps 12 --init-node 2 --amplitude 4 --out " +
               dir.file("out"));
  REQUIRE(rc == 0);
  std::string traj = slurp(dir.file("out/trajectory.csv"));
  CHECK(traj.rfind("sequence_id,t,node_id,v1", 0) == 0);
  // 13 states x 6 nodes + header
  int lines = 0;
  for (char c : traj)
    if (c == '\n') ++lines;
  CHECK(lines == 13 * 6 + 1);
  std::string summary = slurp(dir.file("out/summary.json"));
  CHECK(summary.find("\"dirichlet_nonincreasing\": true") != std::string::npos);
  CHECK(summary.find("\"mass_drift\"") != std::string::npos);
}

TEST_CASE("gen-data, train, and eval chain together") {
  TempDir dir("cli_chain");
  write_graph(dir.file("graph.json"));
  REQUIRE(run("gen-data --graph " + dir.file("graph.json") +
              " --eq diffusion --alpha 0.12 --sequences 2 --steps 25 --noise-std 0.01"
              " --amplitude 3 --seed 5 --out " + dir.file("data")) == 0);
  CHECK(fs::exists(dir.file("data/manifest.json")));
  CHECK(fs::exists(dir.file("data/features.csv")));

  REQUIRE(run("train --data " + dir.file("data/manifest.json") +
              " --model dpgn --iterations 40 --d-h 6 --t-steps 1 --lambda 1e-4 --seed 1"
              " --log-every 20 --out " + dir.file("run"),
              dir.file("train_stdout.json")) == 0);
  CHECK(fs::exists(dir.file("run/checkpoint.json")));
  CHECK(fs::exists(dir.file("run/metrics.jsonl")));
  std::string report = slurp(dir.file("train_stdout.json"));
  CHECK(report.find("\"test_mean_mse\"") != std::string::npos);

  REQUIRE(run("eval --data " + dir.file("data/manifest.json") + " --checkpoint " +
              dir.file("run/checkpoint.json") + " --horizon 2",
              dir.file("eval_stdout.json")) == 0);
  std::string eval_report = slurp(dir.file("eval_stdout.json"));
  CHECK(eval_report.find("\"mean_mse\"") != std::string::npos);
}

TEST_CASE("eval on a missing checkpoint exits with code 4") {
  TempDir dir("cli_missing_ck");
  write_graph(dir.file("graph.json"));
  REQUIRE(run("gen-data --graph " + dir.file("graph.json") +
              " --eq diffusion --sequences 1 --steps 10 --noise-std 0 --seed 2 --out " +
              dir.file("data")) == 0);
  CHECK(run("eval --data " + dir.file("data/manifest.json") +
            " --checkpoint nope.json") == 4);
}

TEST_CASE("training reruns are bit-identical") {
  TempDir dir("cli_determinism");
  write_graph(dir.file("graph.json"));
  REQUIRE(run("gen-data --graph " + dir.file("graph.json") +
              " --eq diffusion --sequences 1 --steps 20 --noise-std 0.02 --seed 9 --out " +
              dir.file("data")) == 0);
  std::string base = "train --data " + dir.file("data/manifest.json") +
                     " --model gn-only --iterations 25 --d-h 4 --seed 7 --log-every 10 --out ";
  REQUIRE(run(base + dir.file("a")) == 0);
  REQUIRE(run(base + dir.file("b")) == 0);
  CHECK(slurp(dir.file("a/metrics.jsonl")) == slurp(dir.file("b/metrics.jsonl")));
  CHECK(slurp(dir.file("a/checkpoint.json")) == slurp(dir.file("b/checkpoint.json")));
  CHECK(!slurp(dir.file("a/metrics.jsonl")).empty());
}

TEST_CASE("a diverging run exits with code 3") {
  TempDir dir("cli_diverge");
  write_graph(dir.file("graph.json"));
  REQUIRE(run("gen-data --graph " + dir.file("graph.json") +
              " --eq diffusion --sequences 1 --steps 15 --noise-std 0.01 --seed 3 --out " +
              dir.file("data")) == 0);
  // an absurd learning rate reliably blows the loss up to non-finite values
  int rc = run("train --data " + dir.file("data/manifest.json") +
               " --model dpgn --iterations 50 --d-h 8 --lr 1e80 --seed 1");
  CHECK(rc == 3);
}

TEST_CASE("config file values apply only where flags are absent") {
  TempDir dir("cli_config");
  write_graph(dir.file("graph.json"));
  REQUIRE(run("gen-data --graph " + dir.file("graph.json") +
              " --eq diffusion --sequences 1 --steps 18 --noise-std 0.01 --seed 4 --out " +
              dir.file("data")) == 0);
  {
    std::ofstream cfg(dir.file("cfg.json"));
    cfg << R"({"iterations": 10, "d_h": 4, "seed": 21})";
  }
  // --iterations on the command line wins; d_h and seed come from the file
  REQUIRE(run("train --data " + dir.file("data/manifest.json") +
              " --config " + dir.file("cfg.json") +
              " --model gn-skip --iterations 15 --log-every 5 --out " + dir.file("run")) == 0);
  std::string metrics = slurp(dir.file("run/metrics.jsonl"));
  CHECK(metrics.find("\"iteration\":15") != std::string::npos);
  std::string ck = slurp(dir.file("run/checkpoint.json"));
  CHECK(ck.find("\"d_h\":4") != std::string::npos);
}
