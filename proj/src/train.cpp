#include "dpgn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpgn/errors.hpp"
#include "dpgn/log.hpp"
#include "dpgn/rng.hpp"
#include "vendor/json.hpp"

namespace dpgn {
namespace {

struct AdamState {
  ParamMap m, v;
  int t = 0;
};

void adam_step(ParamMap& params, const ParamMap& grads, AdamState& st, const TrainConfig& cfg) {
  ++st.t;
  double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  double corr1 = 1.0 - std::pow(b1, st.t);
  double corr2 = 1.0 - std::pow(b2, st.t);
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    Tensor& m = st.m.emplace(name, Tensor(p.rows(), p.cols())).first->second;
    Tensor& v = st.v.emplace(name, Tensor(p.rows(), p.cols())).first->second;
    for (int i = 0; i < p.numel(); ++i) {
      double gi = g.data[i];
      m.data[i] = b1 * m.data[i] + (1.0 - b1) * gi;
      v.data[i] = b2 * v.data[i] + (1.0 - b2) * gi * gi;
      double mhat = m.data[i] / corr1;
      double vhat = v.data[i] / corr2;
      p.data[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
}

// Forward pass + scoring of one window; shared by training-time logging and
// the public evaluate().
struct WindowScore {
  std::vector<double> sqerr;  // per horizon, summed over nodes and channels
  double physics = 0.0;
};

WindowScore score_window(const Graph& g, const DirectedEdges& de, const ModelConfig& mc,
                         const ParamMap& params, const TrajectoryDataset& ds, int start,
                         int horizon, double alpha) {
  Tape tape;
  ModelVars vars = bind_model_params(tape, params, mc);
  Var x = tape.constant(ds.features_at(start));
  ForwardResult fwd = model_forward(tape, g, de, mc, vars, x, ds.edge_types, horizon);

  WindowScore sc;
  sc.sqerr.resize(horizon);
  for (int h = 1; h <= horizon; ++h) {
    Var err = tape.squared_error(fwd.predictions[h - 1], tape.constant(ds.targets_at(start + h - 1)));
    sc.sqerr[h - 1] = tape.value(err).item();
  }
  if (!fwd.node_states.empty() && fwd.node_states.size() >= 2) {
    Var lap = laplacian_const(tape, g);
    sc.physics = tape.value(physics_loss(tape, lap, fwd.node_states, alpha)).item();
  }
  return sc;
}

EvalResult evaluate_impl(const ModelConfig& mc, const ParamMap& params,
                         const TrajectoryDataset& ds, int max_horizon, Split split, double alpha) {
  if (max_horizon < 1) fail(Errc::config_error, "evaluate: horizon must be >= 1");
  if (mc.kind == ModelKind::mlp && max_horizon != 1)
    fail(Errc::config_error, "mlp model is one-step only");
  const Graph& g = ds.graph;
  DirectedEdges de = DirectedEdges::from(g);

  EvalResult res;
  res.mse.assign(max_horizon, 0.0);
  std::vector<int> starts = ds.window_starts(max_horizon, split);
  res.n_windows = static_cast<int>(starts.size());
  if (starts.empty()) return res;

  for (int f : starts) {
    WindowScore sc = score_window(g, de, mc, params, ds, f, max_horizon, alpha);
    for (int h = 0; h < max_horizon; ++h) res.mse[h] += sc.sqerr[h];
    res.physics += sc.physics;
  }
  double denom = static_cast<double>(starts.size()) * g.n_nodes() * ds.n_targets;
  for (double& m : res.mse) m /= denom;
  res.physics /= static_cast<double>(starts.size());
  return res;
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.lambda < 0) fail(Errc::config_error, "lambda must be >= 0");
  if (!std::isfinite(cfg.alpha)) fail(Errc::config_error, "alpha must be finite");
  if (cfg.t_steps < 1) fail(Errc::config_error, "t_steps must be >= 1");
  if (cfg.kind == ModelKind::mlp && cfg.t_steps != 1)
    fail(Errc::config_error, "mlp model is one-step only (t_steps must be 1)");
  if (cfg.learning_rate <= 0) fail(Errc::config_error, "learning_rate must be positive");
  if (cfg.iterations < 1) fail(Errc::config_error, "iterations must be >= 1");
  if (cfg.label_fraction < 0 || cfg.label_fraction > 1)
    fail(Errc::config_error, "label_fraction must lie in [0, 1]");
  if (cfg.adam_beta1 < 0 || cfg.adam_beta1 >= 1 || cfg.adam_beta2 < 0 || cfg.adam_beta2 >= 1)
    fail(Errc::config_error, "adam betas must lie in [0, 1)");
  if (cfg.adam_eps <= 0) fail(Errc::config_error, "adam_eps must be positive");
  if (cfg.d_h < 1) fail(Errc::config_error, "d_h must be >= 1");
  if (cfg.log_every < 1) fail(Errc::config_error, "log_every must be >= 1");
  if (cfg.kind != ModelKind::dpgn && cfg.lambda != 0)
    log_info("model kind " + to_string(cfg.kind) + " ignores lambda (physics weight forced to 0)");
}

std::string metrics_to_jsonl(const std::vector<MetricRecord>& log) {
  std::string out;
  for (const MetricRecord& r : log) {
    nlohmann::json j;
    j["iteration"] = r.iteration;
    j["split"] = r.split;
    j["mse"] = r.mse;
    j["physics"] = r.physics;
    j["horizon"] = r.horizon;
    out += j.dump();
    out += '\n';
  }
  return out;
}

double EvalResult::mean_mse() const {
  if (mse.empty()) return 0.0;
  double s = 0.0;
  for (double m : mse) s += m;
  return s / static_cast<double>(mse.size());
}

TrainResult train(const TrajectoryDataset& ds, const TrainConfig& cfg) {
  validate(cfg);
  if (ds.n_frames() == 0) fail(Errc::empty_dataset, "train: dataset has no frames");

  ModelConfig mc;
  mc.kind = cfg.kind;
  mc.d_in = ds.n_features;
  mc.d_out = ds.n_targets;
  mc.d_h = cfg.d_h;
  mc.n_edge_types = ds.n_edge_types();

  double lambda = cfg.kind == ModelKind::dpgn ? cfg.lambda : 0.0;
  if (mc.kind == ModelKind::mlp) lambda = 0.0;
  int t_steps = cfg.t_steps;

  const Graph& g = ds.graph;
  DirectedEdges de = DirectedEdges::from(g);
  ParamMap params = init_model_params(mc, cfg.seed);

  // Fixed label mask over train frames.
  std::vector<char> labeled(ds.n_frames(), 0);
  {
    std::vector<int> train_frames;
    for (int f = 0; f < ds.n_frames(); ++f)
      if (ds.split[f] == Split::train) train_frames.push_back(f);
    if (train_frames.empty()) fail(Errc::empty_dataset, "train: no frames in the train split");
    Rng mask_rng(cfg.seed ^ 0x6d61736bULL);
    for (int i = static_cast<int>(train_frames.size()) - 1; i > 0; --i)
      std::swap(train_frames[i], train_frames[mask_rng.uniform_int(i + 1)]);
    auto n_lab = static_cast<size_t>(
        std::llround(cfg.label_fraction * static_cast<double>(train_frames.size())));
    for (size_t i = 0; i < n_lab && i < train_frames.size(); ++i) labeled[train_frames[i]] = 1;
  }

  std::vector<int> starts = ds.window_starts(t_steps, Split::train);
  if (lambda == 0) {
    // Without the physics term a window needs at least one labeled frame.
    std::vector<int> keep;
    for (int f : starts)
      for (int k = 0; k < t_steps; ++k)
        if (labeled[f + k]) {
          keep.push_back(f);
          break;
        }
    starts = std::move(keep);
  }
  if (starts.empty())
    fail(Errc::config_error,
         "train: no usable training windows (check t_steps, label_fraction, lambda)");

  bool select_on_val = cfg.label_fraction > 0;
  std::vector<int> val_starts = ds.window_starts(t_steps, Split::val);
  if (val_starts.empty()) select_on_val = false;

  TrainResult result;
  result.model_cfg = mc;
  AdamState adam;
  Rng samp_rng(cfg.seed ^ 0x73616d70ULL);

  ParamMap best_params;
  double best_val = 0.0;
  int best_iter = -1;

  auto log_point = [&](int iteration) {
    EvalResult tr = evaluate_impl(mc, params, ds, t_steps, Split::train, cfg.alpha);
    result.log.push_back({iteration, "train", tr.mean_mse(), tr.physics, t_steps});
    if (!val_starts.empty()) {
      EvalResult va = evaluate_impl(mc, params, ds, t_steps, Split::val, cfg.alpha);
      result.log.push_back({iteration, "val", va.mean_mse(), va.physics, t_steps});
      if (select_on_val && (best_iter < 0 || va.mean_mse() < best_val)) {
        best_val = va.mean_mse();
        best_iter = iteration;
        best_params = params;
      }
    }
  };

  log_point(0);

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    int f = starts[samp_rng.uniform_int(static_cast<int>(starts.size()))];
    try {
      Tape tape;
      ModelVars vars = bind_model_params(tape, params, mc);
      Var x = tape.constant(ds.features_at(f));
      ForwardResult fwd = model_forward(tape, g, de, mc, vars, x, ds.edge_types, t_steps);

      Var loss;
      for (int h = 1; h <= t_steps; ++h) {
        if (!labeled[f + h - 1]) continue;
        Var term =
            tape.squared_error(fwd.predictions[h - 1], tape.constant(ds.targets_at(f + h - 1)));
        loss = loss.valid() ? tape.add(loss, term) : term;
      }
      if (lambda > 0) {
        Var lap = laplacian_const(tape, g);
        Var phys = tape.scalar_mul(physics_loss(tape, lap, fwd.node_states, cfg.alpha), lambda);
        loss = loss.valid() ? tape.add(loss, phys) : phys;
      }
      if (!loss.valid()) continue;  // window with nothing to optimize

      double loss_val = tape.value(loss).item();
      if (!std::isfinite(loss_val))
        fail(Errc::non_finite_loss, "training diverged at iteration " + std::to_string(iter));

      ParamMap grads = tape.gradients(loss);
      adam_step(params, grads, adam, cfg);
    } catch (const Error& e) {
      if (e.code() == Errc::non_finite_value || e.code() == Errc::non_finite_loss)
        fail(Errc::non_finite_loss,
             "training diverged at iteration " + std::to_string(iter) + ": " + e.what());
      throw;
    }

    if (iter % cfg.log_every == 0 || iter == cfg.iterations) log_point(iter);
  }

  if (select_on_val && best_iter >= 0) {
    result.params = std::move(best_params);
    result.best_iteration = best_iter;
    result.best_val_mse = best_val;
  } else {
    // Physics-only runs (and runs without validation windows) have no
    // supervised validation signal; keep the final parameters.
    result.params = std::move(params);
    result.best_iteration = cfg.iterations;
    result.best_val_mse = std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

EvalResult evaluate(const ModelConfig& mc, const ParamMap& params, const TrajectoryDataset& ds,
                    int max_horizon, Split split, double alpha) {
  return evaluate_impl(mc, params, ds, max_horizon, split, alpha);
}

EvalResult evaluate_inductive(const ModelConfig& mc, const ParamMap& params,
                              const TrajectoryDataset& other, int max_horizon, double alpha) {
  if (other.n_features != mc.d_in)
    fail(Errc::feature_dim_mismatch, "inductive eval: dataset has " +
                                         std::to_string(other.n_features) +
                                         " features, model expects " + std::to_string(mc.d_in));
  if (other.n_targets != mc.d_out)
    fail(Errc::feature_dim_mismatch, "inductive eval: dataset has " +
                                         std::to_string(other.n_targets) +
                                         " targets, model expects " + std::to_string(mc.d_out));
  return evaluate_impl(mc, params, other, max_horizon, Split::test, alpha);
}

double median(std::vector<double> v) {
  if (v.empty()) fail(Errc::empty_dataset, "median of empty list");
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) fail(Errc::empty_dataset, "mean_std of empty list");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  return {mean, std::sqrt(var)};
}

}  // namespace dpgn
