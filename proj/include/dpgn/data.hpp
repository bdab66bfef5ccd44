#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "dpgn/graph.hpp"
#include "dpgn/tensor.hpp"

namespace dpgn {

enum class Split { train = 0, val = 1, test = 2 };

enum class NormMode { none, zscore };

/// Per-column affine normalization, fit on the train split only.
struct Normalization {
  NormMode mode = NormMode::none;
  std::vector<double> feat_mean, feat_std;
  std::vector<double> targ_mean, targ_std;
};

/// Time-indexed supervised dataset on a fixed graph. Frame f pairs the node
/// features observed at (seq_id[f], t[f]) with the target observed one step
/// later. Frames of one sequence are stored consecutively with contiguous t.
/// Arrays hold raw values; normalization is applied by the accessors.
struct TrajectoryDataset {
  Graph graph;
  std::vector<int> edge_types;                  // per canonical edge
  std::vector<std::string> edge_type_names;     // per canonical edge
  std::map<std::string, int> edge_type_map;     // name -> id; id 0 reserved for unknown
  bool edge_type_map_closed = false;

  int n_features = 0;
  int n_targets = 0;
  std::vector<int> seq_id, t;                   // per frame
  std::vector<Split> split;                     // per frame
  std::vector<double> features;                 // n_frames * n_nodes * n_features
  std::vector<double> targets;                  // n_frames * n_nodes * n_targets
  Normalization norm;

  int n_frames() const { return static_cast<int>(seq_id.size()); }
  /// Rows of the embedding table a model on this dataset needs (reserved
  /// unknown row 0 plus the mapped ids).
  int n_edge_types() const;

  /// Normalized node features of one frame, n_nodes x n_features.
  Tensor features_at(int frame) const;
  /// Normalized targets of one frame, n_nodes x n_targets.
  Tensor targets_at(int frame) const;
  Tensor denormalize_targets(const Tensor& t) const;

  /// True when frames f .. f+h-1 exist, share a sequence, have consecutive t,
  /// and all carry `split`.
  bool window_ok(int frame, int h, Split split) const;
  std::vector<int> window_starts(int h, Split split) const;
};

/// Chronological per-sequence split: the earliest fraction[0] of each
/// sequence's frames become train, then val, then test.
void assign_splits(TrajectoryDataset& ds, const std::array<double, 3>& fractions);

/// Fits z-score statistics on the train frames and switches the accessors to
/// normalized output. Columns with zero variance keep scale 1.
void fit_normalization(TrajectoryDataset& ds);

struct DatasetManifest {
  int schema_version = 1;
  std::string graph_path = "graph.json";
  std::string features_path = "features.csv";
  std::string targets_path = "targets.csv";
  std::string edge_types_path;                  // optional
  std::map<std::string, int> edge_type_map;
  bool edge_type_map_closed = false;
  std::array<double, 3> split_fractions{0.65, 0.10, 0.25};
  NormMode normalization = NormMode::zscore;
};

/// Reads a manifest JSON file; paths inside stay relative to its directory.
DatasetManifest read_manifest(const std::string& path);
void write_manifest(const DatasetManifest& m, const std::string& path);

/// Loads the dataset a manifest describes: graph JSON, feature/target CSV,
/// optional edge-type CSV resolved through the map (unknown names become id 0,
/// or UnknownEdgeTypeName when the map is closed), chronological split, and
/// z-score statistics fit on train only.
TrajectoryDataset load_dataset(const std::string& manifest_path);

/// Writes graph/features/targets/edge-type files plus manifest.json into dir
/// (created if missing) and returns the manifest. Raw values are written, so
/// load(save(d)) reproduces d bit-exactly before normalization.
DatasetManifest save_dataset(const TrajectoryDataset& ds, const std::string& dir,
                             NormMode normalization = NormMode::zscore);

/// Graph JSON: {"n_nodes": n, "edges": [[i,j,w],...],
///              "triangle_weights": [[i,j,k,w],...] (optional)}.
Graph load_graph_json(const std::string& path);
void save_graph_json(const Graph& g, const std::string& path);

}  // namespace dpgn
