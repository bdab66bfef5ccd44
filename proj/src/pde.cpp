#include "dpgn/pde.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dpgn/errors.hpp"
#include "dpgn/log.hpp"
#include "dpgn/rng.hpp"

namespace dpgn {
namespace {

void check_shape(const Graph& g, const VertexFunction& v, const char* what) {
  if (v.channels <= 0 || static_cast<int>(v.values.size()) != g.n_nodes() * v.channels)
    fail(Errc::length_mismatch, std::string(what) + ": vertex function does not match graph");
}

VertexFunction diffusion_step_unchecked(const Graph& g, const VertexFunction& v, double alpha) {
  VertexFunction lv = laplacian_apply(g, v);
  VertexFunction out = v;
  for (size_t i = 0; i < out.values.size(); ++i) out.values[i] -= alpha * lv.values[i];
  return out;
}

VertexFunction wave_step_unchecked(const Graph& g, const VertexFunction& v_prev,
                                   const VertexFunction& v_curr, double c) {
  VertexFunction lv = laplacian_apply(g, v_curr);
  VertexFunction out = v_curr;
  double c2 = c * c;
  for (size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = 2.0 * v_curr.values[i] - v_prev.values[i] - c2 * lv.values[i];
  return out;
}

void warn_diffusion_stability(const Graph& g, double alpha) {
  double lam = g.laplacian_lambda_max();
  if (alpha * lam >= 2.0)
    log_warn("diffusion step unstable: alpha * lambda_max = " + std::to_string(alpha * lam) +
             " >= 2");
}

void warn_wave_stability(const Graph& g, double c) {
  double lam = g.laplacian_lambda_max();
  if (c * c * lam >= 4.0)
    log_warn("wave step unstable: c^2 * lambda_max = " + std::to_string(c * c * lam) + " >= 4");
}

bool all_finite(const VertexFunction& v) {
  for (double x : v.values)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

VertexFunction diffusion_step(const Graph& g, const VertexFunction& v, double alpha) {
  check_shape(g, v, "diffusion_step");
  warn_diffusion_stability(g, alpha);
  return diffusion_step_unchecked(g, v, alpha);
}

VertexFunction wave_step(const Graph& g, const VertexFunction& v_prev, const VertexFunction& v_curr,
                         double c) {
  check_shape(g, v_prev, "wave_step");
  check_shape(g, v_curr, "wave_step");
  if (v_prev.values.size() != v_curr.values.size() || v_prev.channels != v_curr.channels)
    fail(Errc::length_mismatch, "wave_step: v_prev and v_curr differ in shape");
  warn_wave_stability(g, c);
  return wave_step_unchecked(g, v_prev, v_curr, c);
}

Trajectory simulate(const Graph& g, const PDESpec& spec, const std::vector<VertexFunction>& init,
                    int steps) {
  int m = spec.time_order();
  if (static_cast<int>(init.size()) != m)
    fail(Errc::bad_init_count, "simulate: expected " + std::to_string(m) +
                                   " initial state(s), got " + std::to_string(init.size()));
  if (steps < 0) fail(Errc::config_error, "simulate: steps must be >= 0");
  for (auto& v : init) check_shape(g, v, "simulate");
  if (m == 2 && (init[0].values.size() != init[1].values.size() ||
                 init[0].channels != init[1].channels))
    fail(Errc::length_mismatch, "simulate: initial states differ in shape");

  if (spec.kind == PDEKind::diffusion)
    warn_diffusion_stability(g, spec.alpha);
  else
    warn_wave_stability(g, spec.c);

  Trajectory traj;
  traj.states = init;
  traj.states.reserve(static_cast<size_t>(steps) + m);
  for (int k = 0; k < steps; ++k) {
    VertexFunction next =
        spec.kind == PDEKind::diffusion
            ? diffusion_step_unchecked(g, traj.states.back(), spec.alpha)
            : wave_step_unchecked(g, traj.states[traj.states.size() - 2], traj.states.back(),
                                  spec.c);
    if (!all_finite(next))
      fail(Errc::non_finite_state, "simulate: state became non-finite at step " +
                                       std::to_string(k + 1) + " of " + std::to_string(steps));
    traj.states.push_back(std::move(next));
  }
  return traj;
}

TrajectoryDataset make_synthetic_dataset(const Graph& g, const PDESpec& spec, int n_sequences,
                                         int steps, std::uint64_t seed, double noise_std,
                                         double amplitude) {
  if (n_sequences <= 0 || steps <= 0)
    fail(Errc::config_error, "make_synthetic_dataset: n_sequences and steps must be positive");
  if (noise_std < 0) fail(Errc::config_error, "make_synthetic_dataset: noise_std must be >= 0");
  int n = g.n_nodes();

  // Wave pulses start at an "end" of the graph: a node of minimum degree.
  std::vector<int> pulse_sites;
  if (spec.kind == PDEKind::wave) {
    int min_deg = n;
    for (int i = 0; i < n; ++i)
      min_deg = std::min(min_deg, g.adj_offsets()[i + 1] - g.adj_offsets()[i]);
    for (int i = 0; i < n; ++i)
      if (g.adj_offsets()[i + 1] - g.adj_offsets()[i] == min_deg) pulse_sites.push_back(i);
  }

  Rng rng(seed);
  TrajectoryDataset ds;
  ds.graph = g;
  ds.n_features = 1;
  ds.n_targets = 1;
  ds.edge_type_names.assign(g.n_edges(), "default");
  ds.edge_type_map["default"] = 1;
  ds.edge_types.assign(g.n_edges(), 1);

  int m = spec.time_order();
  int pairs = steps + m - 1;  // consecutive-snapshot pairs per sequence
  for (int s = 0; s < n_sequences; ++s) {
    std::vector<VertexFunction> init;
    if (spec.kind == PDEKind::diffusion) {
      VertexFunction v0(std::vector<double>(n, 0.0));
      v0.values[rng.uniform_int(n)] = amplitude;
      init.push_back(std::move(v0));
    } else {
      VertexFunction v0(std::vector<double>(n, 0.0));
      v0.values[pulse_sites[rng.uniform_int(static_cast<int>(pulse_sites.size()))]] = amplitude;
      init.push_back(v0);   // v_prev
      init.push_back(v0);   // v_curr: standing start
    }
    Trajectory traj = simulate(g, spec, init, steps);

    std::vector<std::vector<double>> obs(traj.states.size());
    for (size_t t = 0; t < traj.states.size(); ++t) {
      obs[t] = traj.states[t].values;
      if (noise_std > 0)
        for (double& x : obs[t]) x += noise_std * rng.normal();
    }
    for (int p = 0; p < pairs; ++p) {
      ds.seq_id.push_back(s);
      ds.t.push_back(p);
      ds.features.insert(ds.features.end(), obs[p].begin(), obs[p].end());
      ds.targets.insert(ds.targets.end(), obs[p + 1].begin(), obs[p + 1].end());
    }
  }
  assign_splits(ds, {0.65, 0.10, 0.25});
  return ds;
}

void save_trajectory_csv(const Trajectory& traj, const std::string& path, int sequence_id) {
  std::ostringstream out;
  int ch = traj.states.empty() ? 1 : traj.states[0].channels;
  out << "sequence_id,t,node_id";
  for (int c = 0; c < ch; ++c) out << ",v" << (c + 1);
  out << '\n';
  char buf[32];
  for (size_t t = 0; t < traj.states.size(); ++t) {
    const auto& v = traj.states[t];
    int n = v.count();
    for (int i = 0; i < n; ++i) {
      out << sequence_id << ',' << t << ',' << i;
      for (int c = 0; c < ch; ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", v.values[static_cast<size_t>(i) * ch + c]);
        out << ',' << buf;
      }
      out << '\n';
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(Errc::io_error, "cannot open " + path + " for writing");
  f << out.str();
  if (!f.flush()) fail(Errc::io_error, "write failed on " + path);
}

}  // namespace dpgn
