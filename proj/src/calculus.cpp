#include "dpgn/calculus.hpp"

#include <string>

#include "dpgn/errors.hpp"
#include "dpgn/kernels.hpp"

namespace dpgn {

static void check_len(const char* what, int got, int want, int channels) {
  if (got != want * channels)
    fail(Errc::length_mismatch, std::string(what) + " has " + std::to_string(got) +
                                    " values, expected " + std::to_string(want) + " x " +
                                    std::to_string(channels));
}

EdgeFunction gradient(const Graph& g, const VertexFunction& f) {
  const int ch = f.channels;
  check_len("vertex function", static_cast<int>(f.values.size()), g.n_nodes(), ch);
  EdgeFunction out;
  out.channels = ch;
  out.values.resize(static_cast<std::size_t>(g.n_edges()) * ch);
  for (int e = 0; e < g.n_edges(); ++e) {
    const Edge ed = g.edges()[e];
    for (int c = 0; c < ch; ++c)
      out.values[static_cast<std::size_t>(e) * ch + c] =
          f.values[static_cast<std::size_t>(ed.j) * ch + c] -
          f.values[static_cast<std::size_t>(ed.i) * ch + c];
  }
  return out;
}

VertexFunction divergence(const Graph& g, const EdgeFunction& F) {
  const int ch = F.channels;
  check_len("edge function", static_cast<int>(F.values.size()), g.n_edges(), ch);
  VertexFunction out;
  out.channels = ch;
  out.values.assign(static_cast<std::size_t>(g.n_nodes()) * ch, 0.0);
  for (int i = 0; i < g.n_nodes(); ++i) {
    for (int p = g.adj_offsets()[i]; p < g.adj_offsets()[i + 1]; ++p) {
      const int j = g.adj_nodes()[p];
      const int e = g.adj_edge_index()[p];
      const double w = g.adj_weights()[p];
      const double sign = i < j ? 1.0 : -1.0;  // F_ij = -F_ji
      for (int c = 0; c < ch; ++c)
        out.values[static_cast<std::size_t>(i) * ch + c] +=
            w * sign * F.values[static_cast<std::size_t>(e) * ch + c];
    }
  }
  return out;
}

VertexFunction laplacian_apply(const Graph& g, const VertexFunction& f) {
  const int ch = f.channels;
  check_len("vertex function", static_cast<int>(f.values.size()), g.n_nodes(), ch);
  VertexFunction out;
  out.channels = ch;
  out.values.resize(f.values.size());
  kernels::laplacian_apply(g.adj_offsets().data(), g.adj_nodes().data(), g.adj_weights().data(),
                           f.values.data(), out.values.data(), g.n_nodes(), ch);
  return out;
}

TriangleFunction curl(const Graph& g, const EdgeFunction& F) {
  const int ch = F.channels;
  check_len("edge function", static_cast<int>(F.values.size()), g.n_edges(), ch);
  TriangleFunction out;
  out.channels = ch;
  out.values.resize(static_cast<std::size_t>(g.n_triangles()) * ch);
  for (int t = 0; t < g.n_triangles(); ++t) {
    const auto& tri = g.triangles()[t];
    const int eij = g.edge_index(tri[0], tri[1]);
    const int ejk = g.edge_index(tri[1], tri[2]);
    const int eik = g.edge_index(tri[0], tri[2]);
    for (int c = 0; c < ch; ++c) {
      // F(i,j) + F(j,k) + F(k,i) with F(k,i) = -F(i,k)
      out.values[static_cast<std::size_t>(t) * ch + c] =
          F.values[static_cast<std::size_t>(eij) * ch + c] +
          F.values[static_cast<std::size_t>(ejk) * ch + c] -
          F.values[static_cast<std::size_t>(eik) * ch + c];
    }
  }
  return out;
}

EdgeFunction curl_adjoint(const Graph& g, const TriangleFunction& C) {
  const int ch = C.channels;
  check_len("triangle function", static_cast<int>(C.values.size()), g.n_triangles(), ch);
  EdgeFunction out;
  out.channels = ch;
  out.values.assign(static_cast<std::size_t>(g.n_edges()) * ch, 0.0);
  for (int t = 0; t < g.n_triangles(); ++t) {
    const auto& tri = g.triangles()[t];
    const double wt = g.triangle_weight(t);
    // Per edge of the sorted cycle: (a,b) and (b,c) carry +1, (a,c) carries -1.
    const int edge_idx[3] = {g.edge_index(tri[0], tri[1]), g.edge_index(tri[1], tri[2]),
                             g.edge_index(tri[0], tri[2])};
    const double signs[3] = {1.0, 1.0, -1.0};
    for (int s = 0; s < 3; ++s) {
      const int e = edge_idx[s];
      const double we = g.edge_weight(e);
      if (!(we > 0.0)) fail(Errc::zero_edge_weight, "edge " + std::to_string(e));
      const double coef = signs[s] * wt / we;
      for (int c = 0; c < ch; ++c)
        out.values[static_cast<std::size_t>(e) * ch + c] +=
            coef * C.values[static_cast<std::size_t>(t) * ch + c];
    }
  }
  return out;
}

}  // namespace dpgn
