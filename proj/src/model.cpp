#include "dpgn/model.hpp"

#include <fstream>
#include <sstream>

#include "dpgn/errors.hpp"
#include "dpgn/log.hpp"
#include "vendor/json.hpp"

namespace dpgn {

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "dpgn") return ModelKind::dpgn;
  if (s == "gn-only" || s == "gn_only") return ModelKind::gn_only;
  if (s == "gn-skip" || s == "gn_skip") return ModelKind::gn_skip;
  if (s == "mlp") return ModelKind::mlp;
  fail(Errc::config_error, "unknown model kind '" + s + "'");
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::dpgn: return "dpgn";
    case ModelKind::gn_only: return "gn-only";
    case ModelKind::gn_skip: return "gn-skip";
    case ModelKind::mlp: return "mlp";
  }
  return "?";
}

ParamMap init_model_params(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.d_in <= 0 || cfg.d_out <= 0 || cfg.d_h <= 0 || cfg.n_edge_types < 1)
    fail(Errc::config_error, "model dimensions must be positive");
  Rng rng(seed);
  ParamMap p;
  init_affine(p, "encoder", cfg.d_in, cfg.d_h, rng);
  if (cfg.kind != ModelKind::mlp) {
    p["edge_embed"] = glorot(cfg.n_edge_types, cfg.d_h, rng);
    init_gn_params(p, "gn", cfg.d_h, rng);
    if (cfg.kind == ModelKind::gn_skip) {
      // residual flavor: start the block near the identity, otherwise the
      // added updates compound to ~2^T over a T-step rollout at init
      for (auto& [name, t] : p)
        if (name.rfind("gn.", 0) == 0)
          for (double& x : t.data) x *= 0.1;
    }
  }
  init_affine(p, "decoder", cfg.d_h, cfg.d_out, rng);
  return p;
}

ModelVars bind_model_params(Tape& tape, const ParamMap& params, const ModelConfig& cfg) {
  ModelVars v;
  v.encoder = {tape.input("encoder.w", params.at("encoder.w")),
               tape.input("encoder.b", params.at("encoder.b"))};
  if (cfg.kind != ModelKind::mlp) {
    v.edge_embed = tape.input("edge_embed", params.at("edge_embed"));
    v.gn = bind_gn_params(tape, params, "gn");
    v.has_gn = true;
  }
  v.decoder = {tape.input("decoder.w", params.at("decoder.w")),
               tape.input("decoder.b", params.at("decoder.b"))};
  return v;
}

LatentState encode(Tape& tape, const Graph& g, const DirectedEdges& de, Var features,
                   const std::vector<int>& edge_types, const ModelVars& vars) {
  if (static_cast<int>(edge_types.size()) != g.n_edges())
    fail(Errc::length_mismatch, "encode: one edge type per canonical edge required");
  int d_h = tape.value(vars.encoder.w).cols();

  LatentState h;
  h.node_h = affine_relu(tape, features, vars.encoder.w, vars.encoder.b);
  if (vars.has_gn) {
    int rows = tape.value(vars.edge_embed).rows();
    std::vector<int> directed_types(de.count());
    for (int d = 0; d < de.count(); ++d) {
      int t = edge_types[de.canonical[d]];
      directed_types[d] = (t < 0 || t >= rows) ? 0 : t;  // reserved unknown row
    }
    h.edge_h = de.count() > 0 ? tape.gather_rows(vars.edge_embed, directed_types)
                              : tape.constant(Tensor(0, d_h));
  } else {
    h.edge_h = tape.constant(Tensor(0, d_h));
  }
  h.global_h = tape.constant(Tensor(1, d_h));
  return h;
}

std::vector<LatentState> rollout(Tape& tape, const Graph& g, const DirectedEdges& de,
                                 const LatentState& h0, const ModelVars& vars, int t_steps,
                                 bool skip) {
  if (t_steps < 1) fail(Errc::config_error, "rollout: t_steps must be >= 1");
  std::vector<LatentState> states;
  states.reserve(t_steps);
  LatentState h = h0;
  for (int t = 0; t < t_steps; ++t) {
    h = skip ? gn_skip_step(tape, g, de, h, vars.gn) : gn_step(tape, g, de, h, vars.gn);
    states.push_back(h);
  }
  return states;
}

Var decode(Tape& tape, const LatentState& h, const ModelVars& vars) {
  return affine(tape, h.node_h, vars.decoder.w, vars.decoder.b);
}

Var laplacian_const(Tape& tape, const Graph& g) {
  int n = g.n_nodes();
  Tensor l(n, n, laplacian_matrix(g));
  return tape.constant(std::move(l));
}

Var physics_loss(Tape& tape, Var laplacian, const std::vector<Var>& node_states, double alpha) {
  if (node_states.size() < 2)
    fail(Errc::too_few_states, "physics_loss: need at least two latent states, got " +
                                   std::to_string(node_states.size()));
  Var total;
  for (size_t t = 1; t < node_states.size(); ++t) {
    Var prev = node_states[t - 1];
    // target of the residual: v_{t-1} - alpha * L v_{t-1}
    Var stepped = tape.sub(prev, tape.scalar_mul(tape.matmul(laplacian, prev), alpha));
    Var term = tape.squared_error(node_states[t], stepped);
    total = total.valid() ? tape.add(total, term) : term;
  }
  return total;
}

ForwardResult model_forward(Tape& tape, const Graph& g, const DirectedEdges& de,
                            const ModelConfig& cfg, const ModelVars& vars, Var features,
                            const std::vector<int>& edge_types, int t_steps) {
  ForwardResult out;
  if (cfg.kind == ModelKind::mlp) {
    if (t_steps != 1)
      fail(Errc::config_error, "mlp model is one-step only (t_steps=1), got " +
                                   std::to_string(t_steps));
    Var hidden = affine_relu(tape, features, vars.encoder.w, vars.encoder.b);
    out.predictions.push_back(affine(tape, hidden, vars.decoder.w, vars.decoder.b));
    return out;
  }
  LatentState h0 = encode(tape, g, de, features, edge_types, vars);
  out.node_states.push_back(h0.node_h);
  bool skip = cfg.kind == ModelKind::gn_skip;
  for (const LatentState& h : rollout(tape, g, de, h0, vars, t_steps, skip)) {
    out.node_states.push_back(h.node_h);
    out.predictions.push_back(decode(tape, h, vars));
  }
  return out;
}

void save_checkpoint(const std::string& path, const ModelConfig& cfg, const ParamMap& params) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["model"] = to_string(cfg.kind);
  j["d_in"] = cfg.d_in;
  j["d_out"] = cfg.d_out;
  j["d_h"] = cfg.d_h;
  j["n_edge_types"] = cfg.n_edge_types;
  auto& jp = j["params"] = nlohmann::json::object();
  for (const auto& [name, t] : params) {
    jp[name] = {{"shape", {t.rows(), t.cols()}}, {"data", t.data}};
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open " + path + " for writing");
  out << j.dump() << '\n';
  out.flush();
  if (!out) fail(Errc::io_error, "write failed on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  nlohmann::json j = nlohmann::json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) fail(Errc::parse_error, path + ": invalid JSON");
  Checkpoint ck;
  try {
    if (j.value("schema_version", 0) != 1)
      fail(Errc::config_error, path + ": unsupported checkpoint schema");
    ck.cfg.kind = model_kind_from_string(j.at("model").get<std::string>());
    ck.cfg.d_in = j.at("d_in").get<int>();
    ck.cfg.d_out = j.at("d_out").get<int>();
    ck.cfg.d_h = j.at("d_h").get<int>();
    ck.cfg.n_edge_types = j.at("n_edge_types").get<int>();
    for (auto& [name, spec] : j.at("params").items()) {
      auto shape = spec.at("shape").get<std::vector<int>>();
      auto data = spec.at("data").get<std::vector<double>>();
      if (shape.size() != 2 ||
          static_cast<size_t>(shape[0]) * static_cast<size_t>(shape[1]) != data.size())
        fail(Errc::parse_error, path + ": parameter '" + name + "' shape does not match data");
      Tensor t(shape[0], shape[1], std::move(data));
      t.requires_grad = true;
      ck.params[name] = std::move(t);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, path + ": " + e.what());
  }
  return ck;
}

}  // namespace dpgn
