#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dpgn/data.hpp"
#include "dpgn/errors.hpp"
#include "dpgn/pde.hpp"
#include "dpgn/rng.hpp"
#include "test_util.hpp"

using namespace dpgn;
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

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

TrajectoryDataset small_dataset(int n_frames_per_seq, int n_seq = 1) {
  TrajectoryDataset ds;
  ds.graph = build_graph(3, {{0, 1}, {1, 2}});
  ds.edge_types = {1, 1};
  ds.edge_type_names = {"default", "default"};
  ds.edge_type_map = {{"default", 1}};
  ds.n_features = 1;
  ds.n_targets = 1;
  Rng rng(1);
  for (int s = 0; s < n_seq; ++s)
    for (int t = 0; t < n_frames_per_seq; ++t) {
      ds.seq_id.push_back(s);
      ds.t.push_back(t);
      for (int i = 0; i < 3; ++i) ds.features.push_back(rng.uniform(-3.0, 7.0));
      for (int i = 0; i < 3; ++i) ds.targets.push_back(rng.uniform(-3.0, 7.0));
    }
  assign_splits(ds, {0.65, 0.10, 0.25});
  return ds;
}

// Minimal valid dataset directory with one 3-node path graph, two frames.
void write_minimal_dataset(const TempDir& dir, const std::string& feature_body,
                           const std::string& manifest_extra = "") {
  write_file(dir.file("graph.json"), R"({"n_nodes": 3, "edges": [[0,1],[1,2]]})");
  write_file(dir.file("features.csv"), feature_body);
  write_file(dir.file("targets.csv"),
             "sequence_id,t,node_id,y1\n"
             "0,0,0,1.0\n0,0,1,2.0\n0,0,2,3.0\n"
             "0,1,0,4.0\n0,1,1,5.0\n0,1,2,6.0\n");
  write_file(dir.file("manifest.json"),
             "{\"schema_version\": 1, \"normalization\": \"none\"" + manifest_extra + "}");
}

const char* kGoodFeatures =
    "sequence_id,t,node_id,f1\n"
    "0,0,0,0.5\n0,0,1,1.5\n0,0,2,2.5\n"
    "0,1,0,3.5\n0,1,1,4.5\n0,1,2,5.5\n";

}  // namespace

TEST_CASE("save and load round-trip a synthetic dataset bit-exactly") {
  Graph g = build_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}});
  auto ds = make_synthetic_dataset(g, {PDEKind::diffusion, 0.08, 0.3}, 3, 14, 123, 0.02, 2.0);
  TempDir dir("roundtrip");
  save_dataset(ds, dir.path.string());
  auto back = load_dataset(dir.file("manifest.json"));

  CHECK(back.graph.n_nodes() == 5);
  CHECK(back.graph.n_edges() == 5);
  CHECK(back.n_features == ds.n_features);
  CHECK(back.n_targets == ds.n_targets);
  CHECK(back.seq_id == ds.seq_id);
  CHECK(back.t == ds.t);
  CHECK(back.features == ds.features);  // %.17g survives the trip exactly
  CHECK(back.targets == ds.targets);
  CHECK(back.edge_types == ds.edge_types);
  REQUIRE(back.split.size() == ds.split.size());
  for (size_t i = 0; i < ds.split.size(); ++i) CHECK(back.split[i] == ds.split[i]);
}

TEST_CASE("chronological split fractions on a 100-frame sequence") {
  auto ds = small_dataset(100);
  int counts[3] = {0, 0, 0};
  for (int f = 0; f < ds.n_frames(); ++f) {
    counts[static_cast<int>(ds.split[f])]++;
    // chronological: all train frames precede all val frames precede test
    if (f > 0) CHECK(static_cast<int>(ds.split[f - 1]) <= static_cast<int>(ds.split[f]));
  }
  CHECK(counts[0] == 65);
  CHECK(counts[1] == 10);
  CHECK(counts[2] == 25);
}

TEST_CASE("splits are computed per sequence") {
  auto ds = small_dataset(20, 3);
  for (int s = 0; s < 3; ++s) {
    int counts[3] = {0, 0, 0};
    for (int f = 0; f < ds.n_frames(); ++f)
      if (ds.seq_id[f] == s) counts[static_cast<int>(ds.split[f])]++;
    CHECK(counts[0] == 13);  // floor(0.65 * 20)
    CHECK(counts[1] == 2);   // floor(0.10 * 20)
    CHECK(counts[2] == 5);   // remainder
  }
}

TEST_CASE("normalization statistics come from the train split only") {
  auto ds = small_dataset(40);
  fit_normalization(ds);
  auto mean_before = ds.norm.feat_mean;
  auto std_before = ds.norm.feat_std;
  REQUIRE(ds.norm.mode == NormMode::zscore);

  // corrupt every non-train frame; the statistics must not move
  for (int f = 0; f < ds.n_frames(); ++f) {
    if (ds.split[f] == Split::train) continue;
    for (int i = 0; i < 3; ++i) ds.features[static_cast<size_t>(f) * 3 + i] = 1e6;
  }
  fit_normalization(ds);
  CHECK(ds.norm.feat_mean == mean_before);
  CHECK(ds.norm.feat_std == std_before);
}

TEST_CASE("normalized train features have zero mean and unit variance") {
  auto ds = small_dataset(60);
  fit_normalization(ds);
  double sum = 0.0, sumsq = 0.0;
  int count = 0;
  for (int f = 0; f < ds.n_frames(); ++f) {
    if (ds.split[f] != Split::train) continue;
    Tensor x = ds.features_at(f);
    for (double v : x.data) {
      sum += v;
      sumsq += v * v;
      ++count;
    }
  }
  double mean = sum / count;
  double var = sumsq / count - mean * mean;
  CHECK(std::abs(mean) < 1e-12);
  CHECK(std::abs(var - 1.0) < 1e-10);
}

TEST_CASE("denormalize inverts the target accessor") {
  auto ds = small_dataset(30);
  fit_normalization(ds);
  for (int f : {0, 7, 29}) {
    Tensor normed = ds.targets_at(f);
    Tensor raw = ds.denormalize_targets(normed);
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(raw.at(i, 0) - ds.targets[static_cast<size_t>(f) * 3 + i]) < 1e-12);
  }
}

TEST_CASE("accessors pass values through when normalization is off") {
  auto ds = small_dataset(10);
  REQUIRE(ds.norm.mode == NormMode::none);
  Tensor x = ds.features_at(4);
  for (int i = 0; i < 3; ++i) CHECK(x.at(i, 0) == ds.features[4 * 3 + i]);
}

TEST_CASE("constant columns normalize with unit scale") {
  auto ds = small_dataset(20);
  for (int f = 0; f < ds.n_frames(); ++f)
    for (int i = 0; i < 3; ++i) ds.features[static_cast<size_t>(f) * 3 + i] = 42.0;
  fit_normalization(ds);
  CHECK(ds.norm.feat_std[0] == 1.0);
  Tensor x = ds.features_at(0);
  for (int i = 0; i < 3; ++i) CHECK(x.at(i, 0) == 0.0);
}

TEST_CASE("window bookkeeping respects sequence and split boundaries") {
  auto ds = small_dataset(20, 2);  // per sequence: 13 train / 2 val / 5 test
  auto starts = ds.window_starts(3, Split::train);
  // train frames are t = 0..12 per sequence; windows of 3 start at 0..10
  CHECK(starts.size() == 22);
  for (int s : starts) CHECK(ds.window_ok(s, 3, Split::train));
  // a window straddling train and val is rejected
  CHECK_FALSE(ds.window_ok(11, 3, Split::train));
  CHECK_FALSE(ds.window_ok(12, 3, Split::train));
  // val windows of length 2 exist once per sequence
  CHECK(ds.window_starts(2, Split::val).size() == 2);
  CHECK(ds.window_starts(3, Split::val).empty());
}

TEST_CASE("empty datasets are rejected") {
  TrajectoryDataset ds;
  ds.graph = build_graph(2, {{0, 1}});
  ds.n_features = 1;
  ds.n_targets = 1;
  CHECK_THROWS_AS(fit_normalization(ds), Error);
}

TEST_CASE("dataset files load through the manifest") {
  TempDir dir("load_ok");
  write_minimal_dataset(dir, kGoodFeatures);
  auto ds = load_dataset(dir.file("manifest.json"));
  CHECK(ds.n_frames() == 2);
  CHECK(ds.n_features == 1);
  CHECK(ds.n_targets == 1);
  CHECK(ds.features[0] == 0.5);
  CHECK(ds.targets[5] == 6.0);
  CHECK(ds.t[1] == 1);
  // no edge-type file: every edge gets the open-map default
  REQUIRE(ds.edge_types.size() == 2);
  CHECK(ds.edge_types[0] == ds.edge_types[1]);
  CHECK(ds.edge_types[0] >= 1);
  CHECK(ds.n_edge_types() >= 2);  // reserved row + at least one real type
}

TEST_CASE("malformed feature files are rejected with parse errors") {
  auto expect_code = [](const TempDir& dir, Errc code) {
    bool threw = false;
    try {
      load_dataset(dir.file("manifest.json"));
    } catch (const Error& e) {
      threw = true;
      CHECK(e.code() == code);
    }
    CHECK(threw);
  };

  SUBCASE("bad header") {
    TempDir dir("bad_header");
    write_minimal_dataset(dir,
                          "seq,t,node,f1\n"
                          "0,0,0,1\n0,0,1,1\n0,0,2,1\n");
    expect_code(dir, Errc::parse_error);
  }
  SUBCASE("wrong value column name") {
    TempDir dir("bad_col");
    write_minimal_dataset(dir,
                          "sequence_id,t,node_id,x1\n"
                          "0,0,0,1\n0,0,1,1\n0,0,2,1\n");
    expect_code(dir, Errc::parse_error);
  }
  SUBCASE("non-numeric value") {
    TempDir dir("bad_value");
    write_minimal_dataset(dir,
                          "sequence_id,t,node_id,f1\n"
                          "0,0,0,abc\n0,0,1,1\n0,0,2,1\n"
                          "0,1,0,1\n0,1,1,1\n0,1,2,1\n");
    expect_code(dir, Errc::parse_error);
  }
  SUBCASE("node ids out of order") {
    TempDir dir("bad_nodes");
    write_minimal_dataset(dir,
                          "sequence_id,t,node_id,f1\n"
                          "0,0,1,1\n0,0,0,1\n0,0,2,1\n"
                          "0,1,0,1\n0,1,1,1\n0,1,2,1\n");
    expect_code(dir, Errc::parse_error);
  }
  SUBCASE("incomplete final frame") {
    TempDir dir("short_frame");
    write_minimal_dataset(dir,
                          "sequence_id,t,node_id,f1\n"
                          "0,0,0,1\n0,0,1,1\n0,0,2,1\n"
                          "0,1,0,1\n0,1,1,1\n");
    expect_code(dir, Errc::misaligned_time);
  }
  SUBCASE("time gaps within a sequence") {
    TempDir dir("time_gap");
    write_minimal_dataset(dir,
                          "sequence_id,t,node_id,f1\n"
                          "0,0,0,1\n0,0,1,1\n0,0,2,1\n"
                          "0,2,0,1\n0,2,1,1\n0,2,2,1\n");
    expect_code(dir, Errc::misaligned_time);
  }
  SUBCASE("feature and target frames disagree") {
    TempDir dir("grid_mismatch");
    write_minimal_dataset(dir,
                          "sequence_id,t,node_id,f1\n"
                          "0,0,0,1\n0,0,1,1\n0,0,2,1\n");
    expect_code(dir, Errc::misaligned_time);
  }
}

TEST_CASE("edge type resolution through the manifest map") {
  auto write_types = [](const TempDir& dir, const std::string& body) {
    write_file(dir.file("edge_types.csv"), body);
  };
  const std::string with_types = ", \"edge_types_path\": \"edge_types.csv\"";

  SUBCASE("open map assigns fresh ids from one") {
    TempDir dir("types_open");
    write_minimal_dataset(dir, kGoodFeatures, with_types);
    write_types(dir, "i,j,type_name\n0,1,road\n1,2,rail\n");
    auto ds = load_dataset(dir.file("manifest.json"));
    CHECK(ds.edge_type_map.at("road") >= 1);
    CHECK(ds.edge_type_map.at("rail") >= 1);
    CHECK(ds.edge_type_map.at("road") != ds.edge_type_map.at("rail"));
    CHECK(ds.edge_types[0] == ds.edge_type_map.at("road"));
    CHECK(ds.edge_types[1] == ds.edge_type_map.at("rail"));
    CHECK(ds.n_edge_types() == 3);  // rows 0 (reserved), road, rail
  }
  SUBCASE("closed map rejects unknown names") {
    TempDir dir("types_closed");
    write_minimal_dataset(
        dir, kGoodFeatures,
        with_types + ", \"edge_type_map\": {\"road\": 1}, \"edge_type_map_closed\": true");
    write_types(dir, "i,j,type_name\n0,1,road\n1,2,rail\n");
    bool threw = false;
    try {
      load_dataset(dir.file("manifest.json"));
    } catch (const Error& e) {
      threw = true;
      CHECK(e.code() == Errc::unknown_edge_type_name);
    }
    CHECK(threw);
  }
  SUBCASE("closed map accepts known names") {
    TempDir dir("types_closed_ok");
    write_minimal_dataset(
        dir, kGoodFeatures,
        with_types +
            ", \"edge_type_map\": {\"road\": 1, \"rail\": 2}, \"edge_type_map_closed\": true");
    write_types(dir, "i,j,type_name\n0,1,rail\n1,2,road\n");
    auto ds = load_dataset(dir.file("manifest.json"));
    CHECK(ds.edge_types[0] == 2);
    CHECK(ds.edge_types[1] == 1);
  }
  SUBCASE("edge type rows must reference real edges") {
    TempDir dir("types_bad_edge");
    write_minimal_dataset(dir, kGoodFeatures, with_types);
    write_types(dir, "i,j,type_name\n0,2,road\n");
    CHECK_THROWS_AS(load_dataset(dir.file("manifest.json")), Error);
  }
}

TEST_CASE("multiple sequences in one csv are grouped correctly") {
  TempDir dir("multi_seq");
  write_file(dir.file("graph.json"), R"({"n_nodes": 2, "edges": [[0,1]]})");
  std::string feats = "sequence_id,t,node_id,f1\n";
  std::string targs = "sequence_id,t,node_id,y1\n";
  int lens[3] = {4, 2, 3};
  for (int s = 0; s < 3; ++s)
    for (int t = 0; t < lens[s]; ++t)
      for (int i = 0; i < 2; ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%d\n", s + 10, t, i, s * 100 + t);
        feats += buf;
        targs += buf;
      }
  write_file(dir.file("features.csv"), feats);
  write_file(dir.file("targets.csv"), targs);
  write_file(dir.file("manifest.json"), R"({"schema_version": 1, "normalization": "none"})");

  auto ds = load_dataset(dir.file("manifest.json"));
  CHECK(ds.n_frames() == 9);
  CHECK(ds.seq_id[0] == 10);
  CHECK(ds.seq_id[4] == 11);
  CHECK(ds.seq_id[6] == 12);
  CHECK(ds.t[3] == 3);
  CHECK(ds.t[4] == 0);  // new sequence restarts its clock
  CHECK(ds.features[0 * 2 + 0] == 0.0);
  CHECK(ds.features[6 * 2 + 0] == 200.0);
}

TEST_CASE("manifest round trip preserves every field") {
  TempDir dir("manifest_rt");
  DatasetManifest m;
  m.edge_types_path = "edge_types.csv";
  m.edge_type_map = {{"road", 1}, {"rail", 2}};
  m.edge_type_map_closed = true;
  m.split_fractions = {0.5, 0.25, 0.25};
  m.normalization = NormMode::none;
  write_manifest(m, dir.file("manifest.json"));
  auto back = read_manifest(dir.file("manifest.json"));
  CHECK(back.schema_version == 1);
  CHECK(back.edge_types_path == m.edge_types_path);
  CHECK(back.edge_type_map == m.edge_type_map);
  CHECK(back.edge_type_map_closed == m.edge_type_map_closed);
  CHECK(back.split_fractions == m.split_fractions);
  CHECK(back.normalization == NormMode::none);
}

TEST_CASE("graph json round trip keeps weights and triangles") {
  TempDir dir("graph_rt");
  std::map<std::array<int, 3>, double> tw;
  tw[{0, 1, 2}] = 0.5;
  Graph g = build_graph(4, {{0, 1}, {1, 2}, {0, 2}, {2, 3}}, {1.5, 2.0, 1.0, 3.0}, tw);
  save_graph_json(g, dir.file("graph.json"));
  Graph back = load_graph_json(dir.file("graph.json"));
  CHECK(back.n_nodes() == 4);
  REQUIRE(back.n_edges() == 4);
  for (int e = 0; e < 4; ++e) {
    CHECK(back.edges()[e].i == g.edges()[e].i);
    CHECK(back.edges()[e].j == g.edges()[e].j);
    CHECK(back.edge_weight(e) == g.edge_weight(e));
  }
  REQUIRE(back.n_triangles() == 1);
  CHECK(back.triangle_weight(0) == 0.5);
}
