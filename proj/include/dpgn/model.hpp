#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpgn/autodiff.hpp"
#include "dpgn/gn.hpp"
#include "dpgn/graph.hpp"

namespace dpgn {

/// dpgn: encoder -> recurrent block -> decoder with the physics penalty.
/// gn_only: the same network with physics weight 0.
/// gn_skip: residual block (H + GN(H)), physics weight 0.
/// mlp: encoder -> decoder per node, no message passing, one-step only.
enum class ModelKind { dpgn, gn_only, gn_skip, mlp };

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind k);

struct ModelConfig {
  ModelKind kind = ModelKind::dpgn;
  int d_in = 1;
  int d_out = 1;
  int d_h = 64;
  int n_edge_types = 2;  // embedding rows; row 0 is the reserved unknown type
};

/// Fresh trainable tensors: "encoder.w/.b" (d_in -> d_h, ReLU applied at
/// encode), "edge_embed" (n_edge_types x d_h), the block's six "gn.*"
/// tensors (absent for mlp), "decoder.w/.b" (d_h -> d_out, linear).
ParamMap init_model_params(const ModelConfig& cfg, std::uint64_t seed);

/// Tape handles to one model's parameters.
struct ModelVars {
  AffineVars encoder, decoder;
  Var edge_embed;
  GnParamVars gn;
  bool has_gn = false;
};

ModelVars bind_model_params(Tape& tape, const ParamMap& params, const ModelConfig& cfg);

/// Eq-by-construction encoder: node_h = ReLU(features W + b), edge_h =
/// embedding row of each directed edge's type (ids outside the table fall
/// back to the reserved row 0), global_h = zeros.
LatentState encode(Tape& tape, const Graph& g, const DirectedEdges& de, Var features,
                   const std::vector<int>& edge_types, const ModelVars& vars);

/// T repeated block applications; returns the T new states (the caller keeps
/// the encoder output for the physics terms).
std::vector<LatentState> rollout(Tape& tape, const Graph& g, const DirectedEdges& de,
                                 const LatentState& h0, const ModelVars& vars, int t_steps,
                                 bool skip);

/// Linear read-out of node_h, n x d_out.
Var decode(Tape& tape, const LatentState& h, const ModelVars& vars);

/// Dense graph Laplacian as a non-differentiable tape constant.
Var laplacian_const(Tape& tape, const Graph& g);

/// Sum over consecutive latent node-state pairs of
/// ||v_t - v_{t-1} + alpha * L v_{t-1}||^2: the squared residual of the
/// explicit diffusion step in latent space. node_states must hold at least
/// two states (TooFewStates).
Var physics_loss(Tape& tape, Var laplacian, const std::vector<Var>& node_states, double alpha);

/// Predictions for horizons 1..T plus every latent node state v~_0..v~_T.
/// For mlp, t_steps must be 1 and there are no latent states to constrain.
struct ForwardResult {
  std::vector<Var> predictions;
  std::vector<Var> node_states;
};

ForwardResult model_forward(Tape& tape, const Graph& g, const DirectedEdges& de,
                            const ModelConfig& cfg, const ModelVars& vars, Var features,
                            const std::vector<int>& edge_types, int t_steps);

/// Versioned JSON checkpoint of a config + parameter store; doubles survive
/// the round trip exactly.
void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ParamMap& params);

struct Checkpoint {
  ModelConfig cfg;
  ParamMap params;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace dpgn
