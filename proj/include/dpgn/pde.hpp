#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpgn/calculus.hpp"
#include "dpgn/data.hpp"
#include "dpgn/graph.hpp"

namespace dpgn {

enum class PDEKind { diffusion, wave };

/// Explicit per-step dynamics on a graph; the step size is absorbed into the
/// coefficients. Diffusion is first order in time, wave second order.
struct PDESpec {
  PDEKind kind = PDEKind::diffusion;
  double alpha = 0.1;  // diffusivity per step
  double c = 0.3;      // wave speed per step
  int time_order() const { return kind == PDEKind::wave ? 2 : 1; }
};

/// Time-ordered snapshots, one per unit step.
struct Trajectory {
  std::vector<VertexFunction> states;
};

/// v' = v - alpha * L v. Dissipative heat step; emits a warning when
/// alpha * lambda_max(L) >= 2 (explicit-Euler stability bound) but still runs.
VertexFunction diffusion_step(const Graph& g, const VertexFunction& v, double alpha);

/// v_next = 2 v_curr - v_prev - c^2 * L v_curr. Warns when
/// c^2 * lambda_max(L) >= 4 but still runs.
VertexFunction wave_step(const Graph& g, const VertexFunction& v_prev,
                         const VertexFunction& v_curr, double c);

/// Repeated stepping from the initial states (one for diffusion, two for
/// wave). Returns steps + time_order states; throws BadInitCount on a wrong
/// init count and NonFiniteState (with the step index) if the state blows up.
Trajectory simulate(const Graph& g, const PDESpec& spec,
                    const std::vector<VertexFunction>& init, int steps);

/// Simulates n_sequences trajectories with random localized initial
/// conditions (a one-hot node of height `amplitude` for diffusion, a pulse at
/// a minimum-degree node for wave) and packs consecutive snapshot pairs into
/// a supervised dataset: features = observed state at t, targets = observed
/// state at t+1. Gaussian observation noise of sd noise_std is added to the
/// observations (not the dynamics). Deterministic given the seed; frames are
/// split chronologically per sequence with the default 0.65/0.10/0.25
/// fractions and left unnormalized.
TrajectoryDataset make_synthetic_dataset(const Graph& g, const PDESpec& spec, int n_sequences,
                                         int steps, std::uint64_t seed, double noise_std,
                                         double amplitude = 1.0);

/// CSV with header sequence_id,t,node_id,v1..vk, one row per node per step.
void save_trajectory_csv(const Trajectory& traj, const std::string& path, int sequence_id = 0);

}  // namespace dpgn
