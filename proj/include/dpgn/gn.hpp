#pragma once

#include <string>
#include <vector>

#include "dpgn/autodiff.hpp"
#include "dpgn/graph.hpp"
#include "dpgn/rng.hpp"

namespace dpgn {

/// Directed expansion of an undirected graph for message passing: canonical
/// edge e becomes directed rows 2e (i -> j) and 2e+1 (j -> i).
struct DirectedEdges {
  std::vector<int> src, dst;   // per directed edge
  std::vector<int> canonical;  // directed row -> canonical edge index

  int count() const { return static_cast<int>(src.size()); }
  static DirectedEdges from(const Graph& g);
};

/// Hidden graph attributes as tape variables: node_h is n x d_h, edge_h one
/// row per directed edge, global_h a single row.
struct LatentState {
  Var node_h, edge_h, global_h;
};

/// Glorot-uniform weight matrix, in x out.
Tensor glorot(int in, int out, Rng& rng);

/// Adds "<prefix>.w" (in x out, Glorot) and "<prefix>.b" (1 x out, zeros) to
/// the store, both trainable.
void init_affine(ParamMap& params, const std::string& prefix, int in, int out, Rng& rng);

/// x W + b, with the bias row broadcast.
Var affine(Tape& tape, Var x, Var w, Var b);
Var affine_relu(Tape& tape, Var x, Var w, Var b);

/// Tape handles for one affine layer's parameters.
struct AffineVars {
  Var w, b;
};

/// The three update networks of one message-passing block, each a single
/// ReLU layer: phi_e on concat(e_ij, v_src, v_dst, u) (4 d_h -> d_h), phi_v on
/// concat(v, out-sum, in-sum, u) (4 d_h -> d_h), phi_u on
/// concat(u, mean e', mean v') (3 d_h -> d_h).
struct GnParamVars {
  AffineVars phi_e, phi_v, phi_u;
};

void init_gn_params(ParamMap& params, const std::string& prefix, int d_h, Rng& rng);

/// Registers the six tensors "<prefix>.phi_e.w" ... as named tape inputs.
GnParamVars bind_gn_params(Tape& tape, const ParamMap& params, const std::string& prefix);

/// One edge -> node -> global update round. Edge messages are computed per
/// directed edge; node updates aggregate outgoing and incoming messages by
/// sum (empty aggregations are zero); the global update averages all edge and
/// node outputs. Fully differentiable.
LatentState gn_step(Tape& tape, const Graph& g, const DirectedEdges& de, const LatentState& h,
                    const GnParamVars& p);

/// gn_step plus a residual connection on every field: H' = H + GN(H).
LatentState gn_skip_step(Tape& tape, const Graph& g, const DirectedEdges& de,
                         const LatentState& h, const GnParamVars& p);

}  // namespace dpgn
