#include "dpgn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dpgn/errors.hpp"
#include "dpgn/kernels.hpp"
#include "dpgn/rng.hpp"

namespace dpgn {

static std::int64_t pair_key(int i, int j, int n) {
  return static_cast<std::int64_t>(i) * n + j;
}

int Graph::edge_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  auto it = edge_lookup_.find(pair_key(i, j, n_nodes_));
  return it == edge_lookup_.end() ? -1 : it->second;
}

bool Graph::connected() const {
  if (n_nodes_ <= 1) return true;
  std::vector<char> seen(n_nodes_, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int e = adj_offsets_[u]; e < adj_offsets_[u + 1]; ++e) {
      int v = adj_nodes_[e];
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n_nodes_;
}

static double estimate_lambda_max(const Graph& g) {
  const int n = g.n_nodes();
  if (n == 0 || g.n_edges() == 0) return 0.0;
  Rng rng(0x5eedu);
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) x[i] = rng.uniform(0.5, 1.5);
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    kernels::serial::laplacian_apply(g.adj_offsets().data(), g.adj_nodes().data(),
                                     g.adj_weights().data(), x.data(), y.data(), n, 1);
    double norm = 0.0;
    for (double v : y) norm += v * v;
    norm = std::sqrt(norm);
    if (norm < 1e-300) return 0.0;
    lambda = norm;
    for (int i = 0; i < n; ++i) x[i] = y[i] / norm;
  }
  return lambda;
}

Graph build_graph(int n_nodes, const std::vector<std::pair<int, int>>& edges,
                  const std::vector<double>& edge_weights,
                  const std::map<std::array<int, 3>, double>& triangle_weights) {
  if (n_nodes <= 0)
    fail(Errc::out_of_range_index, "n_nodes must be positive, got " + std::to_string(n_nodes));
  if (!edge_weights.empty() && edge_weights.size() != edges.size())
    fail(Errc::length_mismatch, "edge_weights has " + std::to_string(edge_weights.size()) +
                                    " entries for " + std::to_string(edges.size()) + " edges");

  struct Rec {
    int i, j;
    double w;
  };
  std::vector<Rec> recs;
  recs.reserve(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    int i = edges[k].first, j = edges[k].second;
    if (i < 0 || i >= n_nodes || j < 0 || j >= n_nodes)
      fail(Errc::out_of_range_index,
           "edge (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
    if (i == j) fail(Errc::self_loop, "self-loop at node " + std::to_string(i));
    if (i > j) std::swap(i, j);
    double w = edge_weights.empty() ? 1.0 : edge_weights[k];
    if (!(w > 0.0) || !std::isfinite(w))
      fail(Errc::non_positive_weight, "edge (" + std::to_string(i) + "," + std::to_string(j) +
                                          ") has weight " + std::to_string(w));
    recs.push_back({i, j, w});
  }
  std::sort(recs.begin(), recs.end(),
            [](const Rec& a, const Rec& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  for (std::size_t k = 1; k < recs.size(); ++k)
    if (recs[k].i == recs[k - 1].i && recs[k].j == recs[k - 1].j)
      fail(Errc::duplicate_edge,
           "edge (" + std::to_string(recs[k].i) + "," + std::to_string(recs[k].j) + ") repeated");

  Graph g;
  g.n_nodes_ = n_nodes;
  g.edges_.reserve(recs.size());
  g.edge_weights_.reserve(recs.size());
  for (std::size_t e = 0; e < recs.size(); ++e) {
    g.edges_.push_back({recs[e].i, recs[e].j});
    g.edge_weights_.push_back(recs[e].w);
    g.edge_lookup_.emplace(pair_key(recs[e].i, recs[e].j, n_nodes), static_cast<int>(e));
  }

  // CSR adjacency, neighbors ascending.
  g.adj_offsets_.assign(n_nodes + 1, 0);
  for (const Edge& e : g.edges_) {
    g.adj_offsets_[e.i + 1]++;
    g.adj_offsets_[e.j + 1]++;
  }
  for (int i = 0; i < n_nodes; ++i) g.adj_offsets_[i + 1] += g.adj_offsets_[i];
  g.adj_nodes_.resize(g.adj_offsets_[n_nodes]);
  g.adj_weights_.resize(g.adj_offsets_[n_nodes]);
  g.adj_edge_.resize(g.adj_offsets_[n_nodes]);
  {
    std::vector<int> cursor(g.adj_offsets_.begin(), g.adj_offsets_.end() - 1);
    for (int e = 0; e < g.n_edges(); ++e) {
      const Edge ed = g.edges_[e];
      const double w = g.edge_weights_[e];
      g.adj_nodes_[cursor[ed.i]] = ed.j;
      g.adj_weights_[cursor[ed.i]] = w;
      g.adj_edge_[cursor[ed.i]++] = e;
      g.adj_nodes_[cursor[ed.j]] = ed.i;
      g.adj_weights_[cursor[ed.j]] = w;
      g.adj_edge_[cursor[ed.j]++] = e;
    }
    // Edges arrive in lexicographic order, so rows built from the i side are
    // already ascending; rows collecting j-side entries need a sort.
    for (int i = 0; i < n_nodes; ++i) {
      struct Ent {
        int v, e;
        double w;
      };
      std::vector<Ent> row;
      for (int p = g.adj_offsets_[i]; p < g.adj_offsets_[i + 1]; ++p)
        row.push_back({g.adj_nodes_[p], g.adj_edge_[p], g.adj_weights_[p]});
      std::sort(row.begin(), row.end(), [](const Ent& a, const Ent& b) { return a.v < b.v; });
      for (std::size_t r = 0; r < row.size(); ++r) {
        int p = g.adj_offsets_[i] + static_cast<int>(r);
        g.adj_nodes_[p] = row[r].v;
        g.adj_edge_[p] = row[r].e;
        g.adj_weights_[p] = row[r].w;
      }
    }
  }

  g.triangles_ = enumerate_triangles(g);
  g.triangle_weights_.assign(g.triangles_.size(), 1.0);
  for (const auto& [key, w] : triangle_weights) {
    std::array<int, 3> t = key;
    std::sort(t.begin(), t.end());
    auto it = std::lower_bound(g.triangles_.begin(), g.triangles_.end(), t);
    if (it == g.triangles_.end() || *it != t)
      fail(Errc::out_of_range_index, "triangle weight given for non-clique {" +
                                         std::to_string(t[0]) + "," + std::to_string(t[1]) + "," +
                                         std::to_string(t[2]) + "}");
    if (w < 0.0 || !std::isfinite(w))
      fail(Errc::non_positive_weight, "triangle weight must be >= 0, got " + std::to_string(w));
    g.triangle_weights_[it - g.triangles_.begin()] = w;
  }

  g.lambda_max_ = estimate_lambda_max(g);
  return g;
}

std::vector<std::array<int, 3>> enumerate_triangles(const Graph& g) {
  std::vector<std::array<int, 3>> out;
  // For each edge (i,j) i<j, any common neighbor k>j closes a triangle; this
  // emits each sorted triple exactly once, in lexicographic order.
  for (const Edge& e : g.edges()) {
    const int i = e.i, j = e.j;
    for (int p = g.adj_offsets()[i]; p < g.adj_offsets()[i + 1]; ++p) {
      const int k = g.adj_nodes()[p];
      if (k <= j) continue;
      if (g.edge_index(j, k) >= 0) out.push_back({i, j, k});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> laplacian_matrix(const Graph& g) {
  const int n = g.n_nodes();
  std::vector<double> L(static_cast<std::size_t>(n) * n, 0.0);
  for (int e = 0; e < g.n_edges(); ++e) {
    const Edge ed = g.edges()[e];
    const double w = g.edge_weight(e);
    L[static_cast<std::size_t>(ed.i) * n + ed.j] -= w;
    L[static_cast<std::size_t>(ed.j) * n + ed.i] -= w;
    L[static_cast<std::size_t>(ed.i) * n + ed.i] += w;
    L[static_cast<std::size_t>(ed.j) * n + ed.j] += w;
  }
  return L;
}

}  // namespace dpgn
