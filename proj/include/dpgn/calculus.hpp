#pragma once

#include <vector>

#include "dpgn/graph.hpp"

namespace dpgn {

// Discrete differential operators on graph attributes. Edge functions are
// antisymmetric, F_ji = -F_ij, stored once per canonical (i<j) edge; triangle
// orientation is the sorted cycle i -> j -> k -> i. Multi-channel values apply
// every operator channel-wise. All operations are pure.

/// Real function on vertices; values is n_nodes x channels, row-major.
struct VertexFunction {
  std::vector<double> values;
  int channels = 1;

  VertexFunction() = default;
  explicit VertexFunction(std::vector<double> v, int ch = 1)
      : values(std::move(v)), channels(ch) {}
  int count() const { return channels > 0 ? static_cast<int>(values.size()) / channels : 0; }
};

/// Real function on canonical edges; value at index e is F_ij for i < j.
struct EdgeFunction {
  std::vector<double> values;
  int channels = 1;

  EdgeFunction() = default;
  explicit EdgeFunction(std::vector<double> v, int ch = 1) : values(std::move(v)), channels(ch) {}
  int count() const { return channels > 0 ? static_cast<int>(values.size()) / channels : 0; }
};

/// Real function on sorted triangles.
struct TriangleFunction {
  std::vector<double> values;
  int channels = 1;

  TriangleFunction() = default;
  explicit TriangleFunction(std::vector<double> v, int ch = 1)
      : values(std::move(v)), channels(ch) {}
  int count() const { return channels > 0 ? static_cast<int>(values.size()) / channels : 0; }
};

/// (grad f)_ij = f_j - f_i per canonical edge (i < j).
EdgeFunction gradient(const Graph& g, const VertexFunction& f);

/// (div F)_i = sum_j w_ij F_ij with F read antisymmetrically.
/// Satisfies div(grad f) = -L f.
VertexFunction divergence(const Graph& g, const EdgeFunction& F);

/// L f, computed from the adjacency; equals laplacian_matrix(g) * f.
VertexFunction laplacian_apply(const Graph& g, const VertexFunction& f);

/// (curl F)(i,j,k) = F(i,j) + F(j,k) + F(k,i) per sorted triangle.
TriangleFunction curl(const Graph& g, const EdgeFunction& F);

/// Adjoint of curl under the weighted inner products:
/// (curl* C)(i,j) = sum_k s * (w_ijk / w_ij) C({i,j,k}) with s = -1 when the
/// third vertex falls between i and j, +1 otherwise. Zero on edges in no
/// triangle. Satisfies div(curl* C) = 0.
EdgeFunction curl_adjoint(const Graph& g, const TriangleFunction& C);

}  // namespace dpgn
