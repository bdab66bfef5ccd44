#pragma once

#include <array>
#include <set>
#include <utility>
#include <vector>

#include "dpgn/graph.hpp"
#include "dpgn/rng.hpp"

namespace test_util {

// Random connected-ish graph: a spanning chain plus independent extra edges,
// optionally with random weights in (0, 2].
inline dpgn::Graph random_graph(dpgn::Rng& rng, int n, double extra_edge_prob = 0.3,
                                bool random_weights = true) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 1; i < n; ++i) edges.emplace_back(i - 1, i);
  for (int i = 0; i < n; ++i)
    for (int j = i + 2; j < n; ++j)
      if (rng.uniform() < extra_edge_prob) edges.emplace_back(i, j);
  std::vector<double> weights;
  if (random_weights)
    for (size_t e = 0; e < edges.size(); ++e) weights.push_back(rng.uniform(0.05, 2.0));
  return dpgn::build_graph(n, edges, weights);
}

inline std::vector<std::array<int, 3>> brute_force_triangles(const dpgn::Graph& g) {
  std::vector<std::array<int, 3>> out;
  int n = g.n_nodes();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        if (g.edge_index(i, j) >= 0 && g.edge_index(i, k) >= 0 && g.edge_index(j, k) >= 0)
          out.push_back({i, j, k});
  return out;
}

inline double degree(const dpgn::Graph& g, int i) {
  double d = 0.0;
  for (int a = g.adj_offsets()[i]; a < g.adj_offsets()[i + 1]; ++a) d += g.adj_weights()[a];
  return d;
}

inline std::vector<double> random_values(dpgn::Rng& rng, int n, double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Dense matrix-vector product for oracle checks; a is n x n row-major.
inline std::vector<double> matvec(const std::vector<double>& a, const std::vector<double>& x,
                                  int n) {
  std::vector<double> y(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) y[i] += a[static_cast<size_t>(i) * n + j] * x[j];
  return y;
}

}  // namespace test_util
