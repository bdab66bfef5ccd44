#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dpgn {

/// Canonical undirected edge, i < j.
struct Edge {
  int i = 0;
  int j = 0;
};

/// Undirected weighted graph with enumerated 3-cliques. Immutable after
/// construction; safe for concurrent reads. Node indices are 0..n_nodes-1.
///
/// Edges are stored once per unordered pair in lexicographic (i < j) order;
/// that order defines the edge index used by every edge-valued function.
/// Triangles are stored as sorted triples in lexicographic order.
class Graph {
 public:
  Graph() = default;

  int n_nodes() const { return n_nodes_; }
  int n_edges() const { return static_cast<int>(edges_.size()); }
  int n_triangles() const { return static_cast<int>(triangles_.size()); }

  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<double>& edge_weights() const { return edge_weights_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<double>& triangle_weights() const { return triangle_weights_; }

  double edge_weight(int e) const { return edge_weights_[e]; }
  double triangle_weight(int t) const { return triangle_weights_[t]; }

  /// Index of edge {i,j} in canonical order, or -1 if absent.
  int edge_index(int i, int j) const;

  /// CSR adjacency: for node i, neighbors adj_nodes()[adj_offsets()[i] ..
  /// adj_offsets()[i+1]) in ascending order with matching edge weights and
  /// canonical edge indices.
  const std::vector<int>& adj_offsets() const { return adj_offsets_; }
  const std::vector<int>& adj_nodes() const { return adj_nodes_; }
  const std::vector<double>& adj_weights() const { return adj_weights_; }
  const std::vector<int>& adj_edge_index() const { return adj_edge_; }

  /// Largest Laplacian eigenvalue, estimated once at construction
  /// (power iteration, deterministic start). Used by stability guards.
  double laplacian_lambda_max() const { return lambda_max_; }

  bool connected() const;

 private:
  friend Graph build_graph(int, const std::vector<std::pair<int, int>>&,
                           const std::vector<double>&,
                           const std::map<std::array<int, 3>, double>&);

  int n_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<double> edge_weights_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<double> triangle_weights_;
  std::unordered_map<std::int64_t, int> edge_lookup_;
  std::vector<int> adj_offsets_, adj_nodes_, adj_edge_;
  std::vector<double> adj_weights_;
  double lambda_max_ = 0.0;
};

/// Validates and builds a Graph. Edge pairs may be given in either order;
/// weights default to 1.0 when the list is empty. Triangles are enumerated
/// from the edges; triangle weights default to 1.0 and may be overridden per
/// sorted triple (weights must be >= 0 and keyed on actual 3-cliques).
///
/// Throws Error with OutOfRangeIndex, SelfLoop, DuplicateEdge,
/// NonPositiveWeight, or LengthMismatch.
Graph build_graph(int n_nodes, const std::vector<std::pair<int, int>>& edges,
                  const std::vector<double>& edge_weights = {},
                  const std::map<std::array<int, 3>, double>& triangle_weights = {});

/// All 3-cliques {i,j,k} of g, each listed once as a sorted triple, in
/// lexicographic order.
std::vector<std::array<int, 3>> enumerate_triangles(const Graph& g);

/// Dense Laplacian L = D - W, row-major n x n. Symmetric, rows sum to zero,
/// positive semi-definite.
std::vector<double> laplacian_matrix(const Graph& g);

}  // namespace dpgn
