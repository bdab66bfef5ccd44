#include "dpgn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dpgn/errors.hpp"
#include "dpgn/log.hpp"
#include "vendor/json.hpp"

namespace dpgn {
namespace {

using nlohmann::json;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(Errc::io_error, "read failed on " + path);
  return ss.str();
}

void spew(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) fail(Errc::io_error, "write failed on " + path);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dir_of(const std::string& path) {
  auto p = std::filesystem::path(path).parent_path();
  return p.empty() ? std::string(".") : p.string();
}

std::string join_path(const std::string& dir, const std::string& rel) {
  if (rel.empty() || std::filesystem::path(rel).is_absolute()) return rel;
  return (std::filesystem::path(dir) / rel).string();
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void bad_row(const std::string& path, int line, const std::string& why) {
  fail(Errc::parse_error, path + ":" + std::to_string(line) + ": " + why);
}

double parse_num(const std::string& tok, const std::string& path, int line) {
  const char* s = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s || *end != '\0') bad_row(path, line, "bad number '" + tok + "'");
  return v;
}

int parse_index(const std::string& tok, const std::string& path, int line) {
  const char* s = tok.c_str();
  char* end = nullptr;
  long v = std::strtol(s, &end, 10);
  if (end == s || *end != '\0') bad_row(path, line, "bad integer '" + tok + "'");
  return static_cast<int>(v);
}

struct FrameTable {
  int n_cols = 0;                 // value columns per row
  std::vector<int> seq, t;        // per frame
  std::vector<double> values;     // n_frames * n_nodes * n_cols
};

// Reads a node-time CSV: header id_cols then n_cols value columns named
// prefix1..prefixN; rows grouped by frame (all node rows together, node ids
// 0..n-1 ascending), frames grouped by sequence with contiguous t.
FrameTable read_frame_csv(const std::string& path, const std::string& prefix, int n_nodes) {
  std::string text = slurp(path);
  std::istringstream in(text);
  std::string line;
  int line_no = 0;

  if (!std::getline(in, line)) fail(Errc::parse_error, path + ": empty file");
  ++line_no;
  auto header = split_fields(line);
  if (header.size() < 4 || header[0] != "sequence_id" || header[1] != "t" || header[2] != "node_id")
    bad_row(path, line_no, "header must start with sequence_id,t,node_id");
  FrameTable tab;
  tab.n_cols = static_cast<int>(header.size()) - 3;
  for (int c = 0; c < tab.n_cols; ++c) {
    std::string want = prefix + std::to_string(c + 1);
    if (header[3 + c] != want)
      bad_row(path, line_no, "expected column '" + want + "', found '" + header[3 + c] + "'");
  }

  int row_in_frame = 0;
  int cur_seq = 0, cur_t = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = split_fields(line);
    if (static_cast<int>(f.size()) != 3 + tab.n_cols)
      bad_row(path, line_no, "expected " + std::to_string(3 + tab.n_cols) + " fields, found " +
                                 std::to_string(f.size()));
    int seq = parse_index(f[0], path, line_no);
    int tt = parse_index(f[1], path, line_no);
    int node = parse_index(f[2], path, line_no);
    if (node != row_in_frame)
      bad_row(path, line_no, "node_id " + std::to_string(node) + " out of order (expected " +
                                 std::to_string(row_in_frame) + ")");
    if (row_in_frame == 0) {
      if (!tab.seq.empty()) {
        if (seq == cur_seq) {
          if (tt != cur_t + 1)
            fail(Errc::misaligned_time, path + ":" + std::to_string(line_no) + ": t=" +
                                            std::to_string(tt) + " after t=" + std::to_string(cur_t) +
                                            " in sequence " + std::to_string(seq));
        } else if (seq < cur_seq) {
          bad_row(path, line_no, "sequence ids must be non-decreasing");
        }
      }
      cur_seq = seq;
      cur_t = tt;
      tab.seq.push_back(seq);
      tab.t.push_back(tt);
    } else if (seq != cur_seq || tt != cur_t) {
      bad_row(path, line_no, "frame switched identity before node rows completed");
    }
    for (int c = 0; c < tab.n_cols; ++c) tab.values.push_back(parse_num(f[3 + c], path, line_no));
    row_in_frame = (row_in_frame + 1) % n_nodes;
  }
  if (row_in_frame != 0)
    fail(Errc::misaligned_time, path + ": last frame has fewer than " + std::to_string(n_nodes) +
                                    " node rows");
  return tab;
}

void write_frame_csv(const std::string& path, const std::string& prefix, int n_nodes, int n_cols,
                     const std::vector<int>& seq, const std::vector<int>& t,
                     const std::vector<double>& values) {
  std::ostringstream out;
  out << "sequence_id,t,node_id";
  for (int c = 0; c < n_cols; ++c) out << ',' << prefix << (c + 1);
  out << '\n';
  int n_frames = static_cast<int>(seq.size());
  for (int fidx = 0; fidx < n_frames; ++fidx)
    for (int v = 0; v < n_nodes; ++v) {
      out << seq[fidx] << ',' << t[fidx] << ',' << v;
      const double* row = values.data() + (static_cast<size_t>(fidx) * n_nodes + v) * n_cols;
      for (int c = 0; c < n_cols; ++c) out << ',' << fmt(row[c]);
      out << '\n';
    }
  spew(path, out.str());
}

int resolve_type(std::map<std::string, int>& map, const std::string& name, bool closed) {
  auto it = map.find(name);
  if (it != map.end()) return it->second;
  if (closed) fail(Errc::unknown_edge_type_name, "edge type '" + name + "' not in closed type map");
  int next = 1;
  for (auto& [_, id] : map) next = std::max(next, id + 1);
  map[name] = next;
  return next;
}

json parse_json_file(const std::string& path) {
  std::string text = slurp(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(Errc::parse_error, path + ": invalid JSON");
  return j;
}

NormMode norm_from_string(const std::string& s) {
  if (s == "zscore") return NormMode::zscore;
  if (s == "none") return NormMode::none;
  fail(Errc::config_error, "unknown normalization '" + s + "' (expected zscore or none)");
}

std::string norm_to_string(NormMode m) { return m == NormMode::zscore ? "zscore" : "none"; }

}  // namespace

int TrajectoryDataset::n_edge_types() const {
  int max_id = 0;
  for (auto& [_, id] : edge_type_map) max_id = std::max(max_id, id);
  for (int id : edge_types) max_id = std::max(max_id, id);
  return max_id + 1;
}

Tensor TrajectoryDataset::features_at(int frame) const {
  int n = graph.n_nodes();
  Tensor out(n, n_features);
  const double* src = features.data() + static_cast<size_t>(frame) * n * n_features;
  if (norm.mode == NormMode::zscore) {
    for (int v = 0; v < n; ++v)
      for (int c = 0; c < n_features; ++c)
        out.data[static_cast<size_t>(v) * n_features + c] =
            (src[static_cast<size_t>(v) * n_features + c] - norm.feat_mean[c]) / norm.feat_std[c];
  } else {
    std::copy(src, src + static_cast<size_t>(n) * n_features, out.data.begin());
  }
  return out;
}

Tensor TrajectoryDataset::targets_at(int frame) const {
  int n = graph.n_nodes();
  Tensor out(n, n_targets);
  const double* src = targets.data() + static_cast<size_t>(frame) * n * n_targets;
  if (norm.mode == NormMode::zscore) {
    for (int v = 0; v < n; ++v)
      for (int c = 0; c < n_targets; ++c)
        out.data[static_cast<size_t>(v) * n_targets + c] =
            (src[static_cast<size_t>(v) * n_targets + c] - norm.targ_mean[c]) / norm.targ_std[c];
  } else {
    std::copy(src, src + static_cast<size_t>(n) * n_targets, out.data.begin());
  }
  return out;
}

Tensor TrajectoryDataset::denormalize_targets(const Tensor& t) const {
  if (t.cols() != n_targets)
    fail(Errc::shape_mismatch, "denormalize_targets: expected " + std::to_string(n_targets) +
                                   " columns, got " + std::to_string(t.cols()));
  Tensor out = t;
  if (norm.mode == NormMode::zscore)
    for (int r = 0; r < t.rows(); ++r)
      for (int c = 0; c < n_targets; ++c)
        out.data[static_cast<size_t>(r) * n_targets + c] =
            t.data[static_cast<size_t>(r) * n_targets + c] * norm.targ_std[c] + norm.targ_mean[c];
  return out;
}

bool TrajectoryDataset::window_ok(int frame, int h, Split s) const {
  if (frame < 0 || h <= 0 || frame + h > n_frames()) return false;
  for (int k = 0; k < h; ++k) {
    int f = frame + k;
    if (split[f] != s) return false;
    if (k > 0 && (seq_id[f] != seq_id[frame] || t[f] != t[frame] + k)) return false;
  }
  return true;
}

std::vector<int> TrajectoryDataset::window_starts(int h, Split s) const {
  std::vector<int> out;
  for (int f = 0; f + h <= n_frames(); ++f)
    if (window_ok(f, h, s)) out.push_back(f);
  return out;
}

void assign_splits(TrajectoryDataset& ds, const std::array<double, 3>& fr) {
  double sum = fr[0] + fr[1] + fr[2];
  if (fr[0] < 0 || fr[1] < 0 || fr[2] < 0 || std::abs(sum - 1.0) > 1e-9)
    fail(Errc::config_error, "split fractions must be non-negative and sum to 1");
  int n = ds.n_frames();
  ds.split.assign(n, Split::test);
  int b = 0;
  while (b < n) {
    int e = b;
    while (e < n && ds.seq_id[e] == ds.seq_id[b]) ++e;
    int len = e - b;
    int n_tr = static_cast<int>(std::floor(fr[0] * len + 1e-9));
    int n_va = static_cast<int>(std::floor(fr[1] * len + 1e-9));
    for (int f = b; f < e; ++f) {
      int k = f - b;
      ds.split[f] = k < n_tr ? Split::train : (k < n_tr + n_va ? Split::val : Split::test);
    }
    b = e;
  }
}

void fit_normalization(TrajectoryDataset& ds) {
  int n = ds.graph.n_nodes();
  auto fit = [&](const std::vector<double>& vals, int cols, std::vector<double>& mean,
                 std::vector<double>& stdev) {
    mean.assign(cols, 0.0);
    stdev.assign(cols, 1.0);
    long count = 0;
    for (int f = 0; f < ds.n_frames(); ++f) {
      if (ds.split[f] != Split::train) continue;
      const double* base = vals.data() + static_cast<size_t>(f) * n * cols;
      for (int v = 0; v < n; ++v)
        for (int c = 0; c < cols; ++c) mean[c] += base[static_cast<size_t>(v) * cols + c];
      count += n;
    }
    if (count == 0) fail(Errc::empty_dataset, "no train frames to fit normalization on");
    for (int c = 0; c < cols; ++c) mean[c] /= static_cast<double>(count);
    std::vector<double> var(cols, 0.0);
    for (int f = 0; f < ds.n_frames(); ++f) {
      if (ds.split[f] != Split::train) continue;
      const double* base = vals.data() + static_cast<size_t>(f) * n * cols;
      for (int v = 0; v < n; ++v)
        for (int c = 0; c < cols; ++c) {
          double d = base[static_cast<size_t>(v) * cols + c] - mean[c];
          var[c] += d * d;
        }
    }
    for (int c = 0; c < cols; ++c) {
      double s = std::sqrt(var[c] / static_cast<double>(count));
      stdev[c] = s < 1e-12 ? 1.0 : s;
    }
  };
  fit(ds.features, ds.n_features, ds.norm.feat_mean, ds.norm.feat_std);
  fit(ds.targets, ds.n_targets, ds.norm.targ_mean, ds.norm.targ_std);
  ds.norm.mode = NormMode::zscore;
}

DatasetManifest read_manifest(const std::string& path) {
  json j = parse_json_file(path);
  if (!j.is_object()) fail(Errc::parse_error, path + ": manifest must be a JSON object");
  DatasetManifest m;
  try {
    m.schema_version = j.value("schema_version", 1);
    if (m.schema_version != 1)
      fail(Errc::config_error, "unsupported schema_version " + std::to_string(m.schema_version));
    m.graph_path = j.value("graph_path", m.graph_path);
    m.features_path = j.value("features_path", m.features_path);
    m.targets_path = j.value("targets_path", m.targets_path);
    m.edge_types_path = j.value("edge_types_path", std::string());
    if (j.contains("edge_type_map")) {
      for (auto& [name, id] : j.at("edge_type_map").items()) {
        int v = id.get<int>();
        if (v <= 0) fail(Errc::config_error, "edge type id for '" + name + "' must be positive");
        m.edge_type_map[name] = v;
      }
    }
    m.edge_type_map_closed = j.value("edge_type_map_closed", false);
    if (j.contains("split_fractions")) {
      auto& a = j.at("split_fractions");
      if (!a.is_array() || a.size() != 3)
        fail(Errc::config_error, "split_fractions must be an array of 3 numbers");
      for (int k = 0; k < 3; ++k) m.split_fractions[k] = a[k].get<double>();
    }
    m.normalization = norm_from_string(j.value("normalization", std::string("zscore")));
  } catch (const json::exception& e) {
    fail(Errc::parse_error, path + ": " + e.what());
  }
  return m;
}

void write_manifest(const DatasetManifest& m, const std::string& path) {
  json j;
  j["schema_version"] = m.schema_version;
  j["graph_path"] = m.graph_path;
  j["features_path"] = m.features_path;
  j["targets_path"] = m.targets_path;
  if (!m.edge_types_path.empty()) j["edge_types_path"] = m.edge_types_path;
  j["edge_type_map"] = json::object();
  for (auto& [name, id] : m.edge_type_map) j["edge_type_map"][name] = id;
  j["edge_type_map_closed"] = m.edge_type_map_closed;
  j["split_fractions"] = m.split_fractions;
  j["normalization"] = norm_to_string(m.normalization);
  spew(path, j.dump(2) + "\n");
}

TrajectoryDataset load_dataset(const std::string& manifest_path) {
  DatasetManifest m = read_manifest(manifest_path);
  std::string dir = dir_of(manifest_path);

  TrajectoryDataset ds;
  ds.graph = load_graph_json(join_path(dir, m.graph_path));
  int n = ds.graph.n_nodes();

  FrameTable feat = read_frame_csv(join_path(dir, m.features_path), "f", n);
  FrameTable targ = read_frame_csv(join_path(dir, m.targets_path), "y", n);
  if (feat.seq.size() != targ.seq.size() || feat.seq != targ.seq || feat.t != targ.t)
    fail(Errc::misaligned_time, "features and targets disagree on the (sequence, t) grid");
  if (feat.seq.empty()) fail(Errc::empty_dataset, "dataset has no frames");

  ds.n_features = feat.n_cols;
  ds.n_targets = targ.n_cols;
  ds.seq_id = std::move(feat.seq);
  ds.t = std::move(feat.t);
  ds.features = std::move(feat.values);
  ds.targets = std::move(targ.values);

  ds.edge_type_map = m.edge_type_map;
  ds.edge_type_map_closed = m.edge_type_map_closed;
  ds.edge_type_names.assign(ds.graph.n_edges(), "default");
  if (!m.edge_types_path.empty()) {
    std::string path = join_path(dir, m.edge_types_path);
    std::string text = slurp(path);
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) fail(Errc::parse_error, path + ": empty file");
    ++line_no;
    auto header = split_fields(line);
    if (header.size() != 3 || header[0] != "i" || header[1] != "j" || header[2] != "type_name")
      bad_row(path, line_no, "header must be i,j,type_name");
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      auto f = split_fields(line);
      if (f.size() != 3) bad_row(path, line_no, "expected 3 fields");
      int i = parse_index(f[0], path, line_no);
      int jn = parse_index(f[1], path, line_no);
      int e = ds.graph.edge_index(i, jn);
      if (e < 0)
        bad_row(path, line_no,
                "no edge (" + std::to_string(i) + "," + std::to_string(jn) + ") in graph");
      ds.edge_type_names[e] = f[2];
    }
  }
  ds.edge_types.resize(ds.graph.n_edges());
  for (int e = 0; e < ds.graph.n_edges(); ++e)
    ds.edge_types[e] = resolve_type(ds.edge_type_map, ds.edge_type_names[e], ds.edge_type_map_closed);

  assign_splits(ds, m.split_fractions);
  if (m.normalization == NormMode::zscore) fit_normalization(ds);
  return ds;
}

DatasetManifest save_dataset(const TrajectoryDataset& ds, const std::string& dir,
                             NormMode normalization) {
  std::filesystem::create_directories(dir);
  DatasetManifest m;
  m.normalization = normalization;
  m.edge_types_path = "edge_types.csv";
  m.edge_type_map = ds.edge_type_map;
  m.edge_type_map_closed = ds.edge_type_map_closed;

  save_graph_json(ds.graph, join_path(dir, m.graph_path));
  write_frame_csv(join_path(dir, m.features_path), "f", ds.graph.n_nodes(), ds.n_features,
                  ds.seq_id, ds.t, ds.features);
  write_frame_csv(join_path(dir, m.targets_path), "y", ds.graph.n_nodes(), ds.n_targets, ds.seq_id,
                  ds.t, ds.targets);

  std::ostringstream et;
  et << "i,j,type_name\n";
  for (int e = 0; e < ds.graph.n_edges(); ++e) {
    auto [i, j] = ds.graph.edges()[e];
    const std::string& name =
        e < static_cast<int>(ds.edge_type_names.size()) ? ds.edge_type_names[e] : "default";
    et << i << ',' << j << ',' << name << '\n';
  }
  spew(join_path(dir, m.edge_types_path), et.str());

  write_manifest(m, join_path(dir, "manifest.json"));
  return m;
}

Graph load_graph_json(const std::string& path) {
  json j = parse_json_file(path);
  if (!j.is_object()) fail(Errc::parse_error, path + ": graph must be a JSON object");
  try {
    int n = j.at("n_nodes").get<int>();
    std::vector<std::pair<int, int>> edges;
    std::vector<double> weights;
    for (auto& e : j.value("edges", json::array())) {
      if (!e.is_array() || e.size() < 2 || e.size() > 3)
        fail(Errc::parse_error, path + ": each edge must be [i,j] or [i,j,w]");
      edges.emplace_back(e[0].get<int>(), e[1].get<int>());
      weights.push_back(e.size() == 3 ? e[2].get<double>() : 1.0);
    }
    std::map<std::array<int, 3>, double> tris;
    for (auto& t : j.value("triangle_weights", json::array())) {
      if (!t.is_array() || t.size() != 4)
        fail(Errc::parse_error, path + ": each triangle weight must be [i,j,k,w]");
      std::array<int, 3> key{t[0].get<int>(), t[1].get<int>(), t[2].get<int>()};
      std::sort(key.begin(), key.end());
      tris[key] = t[3].get<double>();
    }
    return build_graph(n, edges, weights, tris);
  } catch (const json::exception& e) {
    fail(Errc::parse_error, path + ": " + e.what());
  }
}

void save_graph_json(const Graph& g, const std::string& path) {
  json j;
  j["n_nodes"] = g.n_nodes();
  auto edges = json::array();
  for (int e = 0; e < g.n_edges(); ++e) {
    auto [i, jn] = g.edges()[e];
    edges.push_back(json::array({i, jn, g.edge_weights()[e]}));
  }
  j["edges"] = edges;
  if (g.n_triangles() > 0) {
    auto tris = json::array();
    for (int t = 0; t < g.n_triangles(); ++t) {
      auto& tri = g.triangles()[t];
      tris.push_back(json::array({tri[0], tri[1], tri[2], g.triangle_weights()[t]}));
    }
    j["triangle_weights"] = tris;
  }
  spew(path, j.dump(2) + "\n");
}

}  // namespace dpgn
