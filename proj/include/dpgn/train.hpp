#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpgn/data.hpp"
#include "dpgn/model.hpp"

namespace dpgn {

struct TrainConfig {
  ModelKind kind = ModelKind::dpgn;
  double lambda = 1e-5;        // physics weight; forced to 0 for non-dpgn kinds
  double alpha = 0.001;        // latent diffusivity of the physics residual
  int t_steps = 1;             // rollout length T (and the training horizon)
  double learning_rate = 0.001;
  int iterations = 30000;
  std::uint64_t seed = 0;
  double label_fraction = 1.0; // share of train frames with supervised terms
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int d_h = 64;
  int log_every = 100;         // metric cadence in iterations
};

void validate(const TrainConfig& cfg);

/// One metric-log row; serialized as JSON lines.
struct MetricRecord {
  int iteration = 0;
  std::string split;
  double mse = 0.0;      // mean over horizons 1..horizon, windows, nodes, channels
  double physics = 0.0;  // mean physics residual per window (0 when unused)
  int horizon = 1;
};

std::string metrics_to_jsonl(const std::vector<MetricRecord>& log);

struct TrainResult {
  ModelConfig model_cfg;
  ParamMap params;           // selected parameters (see below)
  std::vector<MetricRecord> log;
  int best_iteration = 0;    // iteration whose parameters were selected
  double best_val_mse = 0.0;
};

/// Adam on stochastic training windows: each iteration samples a T-frame
/// train window, unrolls the model from its first frame, and minimizes the
/// labeled squared errors plus lambda times the physics residual. A fixed
/// label mask (label_fraction of the train frames) is drawn once per run.
/// Deterministic given the seed. Returns the parameters with the best
/// validation MSE; with label_fraction = 0 (physics-only regime) or no
/// validation windows, the final parameters are returned instead.
/// Throws NonFiniteLoss (with the iteration index) if the loss diverges.
TrainResult train(const TrajectoryDataset& ds, const TrainConfig& cfg);

struct EvalResult {
  std::vector<double> mse;  // index h-1: MSE of the horizon-(h) prediction
  double physics = 0.0;     // mean physics residual per window
  int n_windows = 0;
  double mean_mse() const;
};

/// Rolls the model out max_horizon steps from every valid window start of the
/// split and scores each horizon's decoded prediction against the stored
/// target (normalized space).
EvalResult evaluate(const ModelConfig& mc, const ParamMap& params, const TrajectoryDataset& ds,
                    int max_horizon, Split split, double alpha = 0.001);

/// evaluate() on a dataset the parameters were not fit on; the feature and
/// target widths must match the model (FeatureDimMismatch). Edge types
/// unknown to the embedding table use the reserved row.
EvalResult evaluate_inductive(const ModelConfig& mc, const ParamMap& params,
                              const TrajectoryDataset& other, int max_horizon,
                              double alpha = 0.001);

double median(std::vector<double> v);
std::pair<double, double> mean_std(const std::vector<double>& v);

}  // namespace dpgn
