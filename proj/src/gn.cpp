#include "dpgn/gn.hpp"

#include <cmath>

#include "dpgn/errors.hpp"

namespace dpgn {

DirectedEdges DirectedEdges::from(const Graph& g) {
  DirectedEdges de;
  de.src.reserve(2 * g.n_edges());
  de.dst.reserve(2 * g.n_edges());
  de.canonical.reserve(2 * g.n_edges());
  for (int e = 0; e < g.n_edges(); ++e) {
    const Edge& ed = g.edges()[e];
    de.src.push_back(ed.i);
    de.dst.push_back(ed.j);
    de.canonical.push_back(e);
    de.src.push_back(ed.j);
    de.dst.push_back(ed.i);
    de.canonical.push_back(e);
  }
  return de;
}

Tensor glorot(int in, int out, Rng& rng) {
  Tensor w(in, out);
  double limit = std::sqrt(6.0 / (in + out));
  for (double& v : w.data) v = rng.uniform(-limit, limit);
  w.requires_grad = true;
  return w;
}

void init_affine(ParamMap& params, const std::string& prefix, int in, int out, Rng& rng) {
  params[prefix + ".w"] = glorot(in, out, rng);
  Tensor b(1, out);
  b.requires_grad = true;
  params[prefix + ".b"] = b;
}

Var affine(Tape& tape, Var x, Var w, Var b) { return tape.add(tape.matmul(x, w), b); }

Var affine_relu(Tape& tape, Var x, Var w, Var b) { return tape.relu(affine(tape, x, w, b)); }

void init_gn_params(ParamMap& params, const std::string& prefix, int d_h, Rng& rng) {
  init_affine(params, prefix + ".phi_e", 4 * d_h, d_h, rng);
  init_affine(params, prefix + ".phi_v", 4 * d_h, d_h, rng);
  init_affine(params, prefix + ".phi_u", 3 * d_h, d_h, rng);
}

namespace {

AffineVars bind_affine(Tape& tape, const ParamMap& params, const std::string& prefix) {
  return {tape.input(prefix + ".w", params.at(prefix + ".w")),
          tape.input(prefix + ".b", params.at(prefix + ".b"))};
}

}  // namespace

GnParamVars bind_gn_params(Tape& tape, const ParamMap& params, const std::string& prefix) {
  GnParamVars p;
  p.phi_e = bind_affine(tape, params, prefix + ".phi_e");
  p.phi_v = bind_affine(tape, params, prefix + ".phi_v");
  p.phi_u = bind_affine(tape, params, prefix + ".phi_u");
  return p;
}

namespace {

// One round of message passing, kept before the output activations so the two
// step flavors can share it. Aggregations always consume the relu'd edge and
// node messages; `*_pre` are the raw affine updates.
struct StepParts {
  Var e_pre, v_pre, u_pre;
  Var e_act, v_act;  // relu'd updates, shared with the aggregations
  bool has_edges = false;
};

StepParts gn_parts(Tape& tape, const Graph& g, const DirectedEdges& de, const LatentState& h,
                   const GnParamVars& p) {
  int n = g.n_nodes();
  int m = de.count();
  int d_h = tape.value(h.node_h).cols();
  if (tape.value(h.node_h).rows() != n || tape.value(h.edge_h).rows() != m ||
      tape.value(h.global_h).rows() != 1 || tape.value(h.edge_h).cols() != d_h ||
      tape.value(h.global_h).cols() != d_h)
    fail(Errc::shape_mismatch, "gn_step: latent state does not match graph");

  StepParts parts;
  parts.has_edges = m > 0;

  if (m > 0) {
    Var v_src = tape.gather_rows(h.node_h, de.src);
    Var v_dst = tape.gather_rows(h.node_h, de.dst);
    Var u_e = tape.gather_rows(h.global_h, std::vector<int>(m, 0));
    Var e_in = tape.concat({h.edge_h, v_src, v_dst, u_e});
    parts.e_pre = affine(tape, e_in, p.phi_e.w, p.phi_e.b);
    parts.e_act = tape.relu(parts.e_pre);
  } else {
    parts.e_pre = h.edge_h;  // zero-row tensor; nothing to update
    parts.e_act = h.edge_h;
  }

  Var out_sum, in_sum;
  if (m > 0) {
    out_sum = tape.segment_sum(parts.e_act, de.src, n);
    in_sum = tape.segment_sum(parts.e_act, de.dst, n);
  } else {
    out_sum = tape.constant(Tensor(n, d_h));
    in_sum = tape.constant(Tensor(n, d_h));
  }
  Var u_v = tape.gather_rows(h.global_h, std::vector<int>(n, 0));
  Var v_in = tape.concat({h.node_h, out_sum, in_sum, u_v});
  parts.v_pre = affine(tape, v_in, p.phi_v.w, p.phi_v.b);
  parts.v_act = tape.relu(parts.v_pre);

  Var e_mean = m > 0 ? tape.segment_mean(parts.e_act, std::vector<int>(m, 0), 1)
                     : tape.constant(Tensor(1, d_h));
  Var v_mean = tape.segment_mean(parts.v_act, std::vector<int>(n, 0), 1);
  Var u_in = tape.concat({h.global_h, e_mean, v_mean});
  parts.u_pre = affine(tape, u_in, p.phi_u.w, p.phi_u.b);

  return parts;
}

}  // namespace

LatentState gn_step(Tape& tape, const Graph& g, const DirectedEdges& de, const LatentState& h,
                    const GnParamVars& p) {
  StepParts parts = gn_parts(tape, g, de, h, p);
  LatentState out;
  out.edge_h = parts.e_act;
  out.node_h = parts.v_act;
  out.global_h = tape.relu(parts.u_pre);
  return out;
}

// The residual flavor adds the raw affine updates: the correction must be
// signed, otherwise latents could only ever grow along a rollout.
LatentState gn_skip_step(Tape& tape, const Graph& g, const DirectedEdges& de,
                         const LatentState& h, const GnParamVars& p) {
  StepParts parts = gn_parts(tape, g, de, h, p);
  LatentState out;
  out.node_h = tape.add(h.node_h, parts.v_pre);
  out.edge_h = parts.has_edges ? tape.add(h.edge_h, parts.e_pre) : h.edge_h;
  out.global_h = tape.add(h.global_h, parts.u_pre);
  return out;
}

}  // namespace dpgn
