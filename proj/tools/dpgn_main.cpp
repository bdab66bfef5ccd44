#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dpgn/calculus.hpp"
#include "dpgn/data.hpp"
#include "dpgn/errors.hpp"
#include "dpgn/log.hpp"
#include "dpgn/model.hpp"
#include "dpgn/pde.hpp"
#include "dpgn/train.hpp"
#include "vendor/CLI11.hpp"
#include "vendor/json.hpp"

namespace {

using dpgn::Errc;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitMissingCheckpoint = 4;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) dpgn::fail(Errc::io_error, "cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) dpgn::fail(Errc::io_error, "write failed on " + path);
}

dpgn::PDESpec parse_pde_flags(const std::string& eq, double alpha, double c) {
  dpgn::PDESpec spec;
  if (eq == "diffusion")
    spec.kind = dpgn::PDEKind::diffusion;
  else if (eq == "wave")
    spec.kind = dpgn::PDEKind::wave;
  else
    dpgn::fail(Errc::config_error, "--eq must be diffusion or wave, got '" + eq + "'");
  spec.alpha = alpha;
  spec.c = c;
  return spec;
}

double dirichlet_energy(const dpgn::Graph& g, const dpgn::VertexFunction& v) {
  dpgn::VertexFunction lv = dpgn::laplacian_apply(g, v);
  double e = 0.0;
  for (size_t i = 0; i < v.values.size(); ++i) e += v.values[i] * lv.values[i];
  return e;
}

// Hyperparameters shared by train / inductive / horizon, overridable from a
// JSON --config file with the command line taking precedence.
struct TrainFlags {
  std::string model = "dpgn";
  double lambda = 1e-5;
  double alpha = 0.001;
  int t_steps = 1;
  double lr = 0.001;
  int iterations = 30000;
  std::uint64_t seed = 0;
  double label_fraction = 1.0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int d_h = 64;
  int log_every = 100;
  std::string config_path;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--model", f.model, "dpgn | gn-only | gn-skip | mlp");
  cmd->add_option("--lambda", f.lambda, "physics loss weight");
  cmd->add_option("--alpha", f.alpha, "latent diffusivity of the physics residual");
  cmd->add_option("--t-steps", f.t_steps, "rollout length T");
  cmd->add_option("--lr", f.lr, "learning rate");
  cmd->add_option("--iterations", f.iterations, "optimizer steps");
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--label-fraction", f.label_fraction, "share of labeled train frames");
  cmd->add_option("--beta1", f.beta1, "Adam beta1");
  cmd->add_option("--beta2", f.beta2, "Adam beta2");
  cmd->add_option("--adam-eps", f.eps, "Adam epsilon");
  cmd->add_option("--d-h", f.d_h, "hidden width");
  cmd->add_option("--log-every", f.log_every, "metric cadence in iterations");
  cmd->add_option("--config", f.config_path, "JSON file with these keys (flags win)");
}

// Applies config-file values only where the flag was not given on the
// command line.
void merge_config_file(const CLI::App* cmd, TrainFlags& f) {
  if (f.config_path.empty()) return;
  std::ifstream in(f.config_path, std::ios::binary);
  if (!in) dpgn::fail(Errc::config_error, "cannot open config " + f.config_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded() || !j.is_object())
    dpgn::fail(Errc::parse_error, f.config_path + ": invalid JSON object");

  auto given = [&](const std::string& flag) { return cmd->count(flag) > 0; };
  try {
    if (j.contains("model") && !given("--model")) f.model = j["model"].get<std::string>();
    if (j.contains("lambda") && !given("--lambda")) f.lambda = j["lambda"].get<double>();
    if (j.contains("alpha") && !given("--alpha")) f.alpha = j["alpha"].get<double>();
    if (j.contains("t_steps") && !given("--t-steps")) f.t_steps = j["t_steps"].get<int>();
    if (j.contains("lr") && !given("--lr")) f.lr = j["lr"].get<double>();
    if (j.contains("iterations") && !given("--iterations"))
      f.iterations = j["iterations"].get<int>();
    if (j.contains("seed") && !given("--seed")) f.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("label_fraction") && !given("--label-fraction"))
      f.label_fraction = j["label_fraction"].get<double>();
    if (j.contains("beta1") && !given("--beta1")) f.beta1 = j["beta1"].get<double>();
    if (j.contains("beta2") && !given("--beta2")) f.beta2 = j["beta2"].get<double>();
    if (j.contains("adam_eps") && !given("--adam-eps")) f.eps = j["adam_eps"].get<double>();
    if (j.contains("d_h") && !given("--d-h")) f.d_h = j["d_h"].get<int>();
    if (j.contains("log_every") && !given("--log-every"))
      f.log_every = j["log_every"].get<int>();
  } catch (const json::exception& e) {
    dpgn::fail(Errc::parse_error, f.config_path + ": " + e.what());
  }
}

dpgn::TrainConfig to_train_config(const TrainFlags& f) {
  dpgn::TrainConfig cfg;
  cfg.kind = dpgn::model_kind_from_string(f.model);
  cfg.lambda = f.lambda;
  cfg.alpha = f.alpha;
  cfg.t_steps = f.t_steps;
  cfg.learning_rate = f.lr;
  cfg.iterations = f.iterations;
  cfg.seed = f.seed;
  cfg.label_fraction = f.label_fraction;
  cfg.adam_beta1 = f.beta1;
  cfg.adam_beta2 = f.beta2;
  cfg.adam_eps = f.eps;
  cfg.d_h = f.d_h;
  cfg.log_every = f.log_every;
  return cfg;
}

json horizons_json(const dpgn::EvalResult& res) {
  json rows = json::array();
  for (size_t h = 0; h < res.mse.size(); ++h)
    rows.push_back({{"horizon", static_cast<int>(h) + 1}, {"mse", res.mse[h]}});
  return rows;
}

void require_file(const std::string& path, int exit_code) {
  if (!std::filesystem::exists(path)) {
    std::cerr << "error: no such file: " << path << "\n";
    std::exit(exit_code);
  }
}

int cmd_simulate(const std::string& graph_path, const std::string& eq, double alpha, double c,
                 int steps, int init_node, double amplitude, std::uint64_t seed,
                 const std::string& out_dir) {
  dpgn::Graph g = dpgn::load_graph_json(graph_path);
  dpgn::PDESpec spec = parse_pde_flags(eq, alpha, c);
  if (init_node < 0 || init_node >= g.n_nodes())
    dpgn::fail(Errc::config_error, "--init-node out of range");

  dpgn::VertexFunction v0(std::vector<double>(g.n_nodes(), 0.0));
  v0.values[init_node] = amplitude;
  std::vector<dpgn::VertexFunction> init(spec.time_order(), v0);
  dpgn::Trajectory traj = dpgn::simulate(g, spec, init, steps);

  std::filesystem::create_directories(out_dir);
  dpgn::save_trajectory_csv(traj, out_dir + "/trajectory.csv");

  double mass0 = 0.0;
  for (double x : traj.states.front().values) mass0 += x;
  double mass_drift = 0.0;
  double energy0 = dirichlet_energy(g, traj.states.front());
  double sq0 = 0.0;
  for (double x : traj.states.front().values) sq0 += x * x;
  double sq_max = sq0;
  bool energy_nonincreasing = true;
  double prev_energy = energy0;
  for (const auto& st : traj.states) {
    double mass = 0.0, sq = 0.0;
    for (double x : st.values) {
      mass += x;
      sq += x * x;
    }
    mass_drift = std::max(mass_drift, std::abs(mass - mass0));
    sq_max = std::max(sq_max, sq);
    double e = dirichlet_energy(g, st);
    if (e > prev_energy + 1e-12) energy_nonincreasing = false;
    prev_energy = e;
  }

  json summary;
  summary["kind"] = eq;
  summary["alpha"] = spec.alpha;
  summary["c"] = spec.c;
  summary["steps"] = steps;
  summary["seed"] = seed;
  summary["n_nodes"] = g.n_nodes();
  summary["n_states"] = traj.states.size();
  summary["mass_drift"] = mass_drift;
  summary["dirichlet_energy_initial"] = energy0;
  summary["dirichlet_energy_final"] = prev_energy;
  summary["dirichlet_nonincreasing"] = energy_nonincreasing;
  summary["sum_sq_initial"] = sq0;
  summary["sum_sq_max"] = sq_max;
  write_text(out_dir + "/summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_gen_data(const std::string& graph_path, const std::string& eq, double alpha, double c,
                 int sequences, int steps, std::uint64_t seed, double noise_std, double amplitude,
                 const std::string& normalization, const std::string& out_dir) {
  dpgn::Graph g = dpgn::load_graph_json(graph_path);
  dpgn::PDESpec spec = parse_pde_flags(eq, alpha, c);
  dpgn::NormMode norm;
  if (normalization == "zscore")
    norm = dpgn::NormMode::zscore;
  else if (normalization == "none")
    norm = dpgn::NormMode::none;
  else
    dpgn::fail(Errc::config_error, "--normalization must be zscore or none");

  dpgn::TrajectoryDataset ds =
      dpgn::make_synthetic_dataset(g, spec, sequences, steps, seed, noise_std, amplitude);
  dpgn::save_dataset(ds, out_dir, norm);

  json info;
  info["kind"] = eq;
  info["alpha"] = spec.alpha;
  info["c"] = spec.c;
  info["sequences"] = sequences;
  info["steps"] = steps;
  info["seed"] = seed;
  info["noise_std"] = noise_std;
  info["amplitude"] = amplitude;
  info["frames"] = ds.n_frames();
  write_text(out_dir + "/generator.json", info.dump(2) + "\n");
  std::cout << info.dump(2) << "\n";
  return 0;
}

int cmd_train(const std::string& data_path, const TrainFlags& flags, const std::string& out_dir) {
  dpgn::TrajectoryDataset ds = dpgn::load_dataset(data_path);
  dpgn::TrainConfig cfg = to_train_config(flags);
  dpgn::TrainResult result = dpgn::train(ds, cfg);

  std::filesystem::create_directories(out_dir);
  dpgn::save_checkpoint(out_dir + "/checkpoint.json", result.model_cfg, result.params);
  write_text(out_dir + "/metrics.jsonl", dpgn::metrics_to_jsonl(result.log));

  dpgn::EvalResult test =
      dpgn::evaluate(result.model_cfg, result.params, ds, cfg.t_steps, dpgn::Split::test,
                     cfg.alpha);
  json out;
  out["model"] = to_string(result.model_cfg.kind);
  out["iterations"] = cfg.iterations;
  out["selected_iteration"] = result.best_iteration;
  out["test_mse_per_horizon"] = horizons_json(test);
  out["test_mean_mse"] = test.mean_mse();
  out["test_windows"] = test.n_windows;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_eval(const std::string& data_path, const std::string& ck_path, int horizon, double alpha,
             const std::string& out_path) {
  require_file(ck_path, kExitMissingCheckpoint);
  dpgn::Checkpoint ck = dpgn::load_checkpoint(ck_path);
  dpgn::TrajectoryDataset ds = dpgn::load_dataset(data_path);
  dpgn::EvalResult res = dpgn::evaluate(ck.cfg, ck.params, ds, horizon, dpgn::Split::test, alpha);

  json out;
  out["model"] = to_string(ck.cfg.kind);
  out["split"] = "test";
  out["mse_per_horizon"] = horizons_json(res);
  out["mean_mse"] = res.mean_mse();
  out["n_windows"] = res.n_windows;
  if (!out_path.empty()) write_text(out_path, out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_inductive(const std::string& train_on, const std::string& eval_on,
                  const TrainFlags& flags, const std::string& out_dir) {
  dpgn::TrajectoryDataset ds_a = dpgn::load_dataset(train_on);
  dpgn::TrajectoryDataset ds_b = dpgn::load_dataset(eval_on);
  dpgn::TrainConfig cfg = to_train_config(flags);
  dpgn::TrainResult result = dpgn::train(ds_a, cfg);

  dpgn::EvalResult in_domain =
      dpgn::evaluate(result.model_cfg, result.params, ds_a, cfg.t_steps, dpgn::Split::test,
                     cfg.alpha);
  dpgn::EvalResult inductive =
      dpgn::evaluate_inductive(result.model_cfg, result.params, ds_b, cfg.t_steps, cfg.alpha);

  json out;
  out["model"] = to_string(result.model_cfg.kind);
  out["in_domain_mse"] = in_domain.mean_mse();
  out["inductive_mse"] = inductive.mean_mse();
  out["ratio"] = in_domain.mean_mse() > 0 ? inductive.mean_mse() / in_domain.mean_mse() : 0.0;
  out["in_domain_windows"] = in_domain.n_windows;
  out["inductive_windows"] = inductive.n_windows;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    dpgn::save_checkpoint(out_dir + "/checkpoint.json", result.model_cfg, result.params);
    write_text(out_dir + "/metrics.jsonl", dpgn::metrics_to_jsonl(result.log));
    write_text(out_dir + "/inductive.json", out.dump(2) + "\n");
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_horizon(const std::string& data_path, const TrainFlags& flags, int horizons, int seeds,
                const std::string& out_path) {
  if (horizons < 1) dpgn::fail(Errc::config_error, "--horizons must be >= 1");
  if (seeds < 1) dpgn::fail(Errc::config_error, "--seeds must be >= 1");
  dpgn::TrajectoryDataset ds = dpgn::load_dataset(data_path);

  std::string lines;
  for (int h = 1; h <= horizons; ++h) {
    std::vector<double> mses;
    for (int s = 0; s < seeds; ++s) {
      dpgn::TrainConfig cfg = to_train_config(flags);
      cfg.t_steps = h;
      cfg.seed = flags.seed + static_cast<std::uint64_t>(s);
      dpgn::TrainResult result = dpgn::train(ds, cfg);
      dpgn::EvalResult res =
          dpgn::evaluate(result.model_cfg, result.params, ds, h, dpgn::Split::test, cfg.alpha);
      mses.push_back(res.mse[h - 1]);
    }
    auto [mean, sd] = dpgn::mean_std(mses);
    json row;
    row["horizon"] = h;
    row["mse"] = mean;
    row["std"] = sd;
    row["seeds"] = seeds;
    lines += row.dump();
    lines += '\n';
    std::cout << row.dump() << "\n";
  }
  if (!out_path.empty()) write_text(out_path, lines);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph-PDE simulation and physics-informed graph-network training"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "run a PDE on a graph and dump the trajectory");
  std::string sim_graph, sim_eq = "diffusion", sim_out = "sim_out";
  double sim_alpha = 0.1, sim_c = 0.3, sim_amp = 1.0;
  int sim_steps = 50, sim_init_node = 0;
  std::uint64_t sim_seed = 0;
  sim->add_option("--graph", sim_graph, "graph JSON file")->required();
  sim->add_option("--eq", sim_eq, "diffusion | wave");
  sim->add_option("--alpha", sim_alpha, "diffusivity per step");
  sim->add_option("--c", sim_c, "wave speed per step");
  sim->add_option("--steps", sim_steps, "number of steps");
  sim->add_option("--init-node", sim_init_node, "node carrying the initial pulse");
  sim->add_option("--amplitude", sim_amp, "initial pulse height");
  sim->add_option("--seed", sim_seed, "recorded in the summary");
  sim->add_option("--out", sim_out, "output directory");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "simulate sequences into a supervised dataset");
  std::string gen_graph, gen_eq = "diffusion", gen_out = "dataset", gen_norm = "zscore";
  double gen_alpha = 0.1, gen_c = 0.3, gen_noise = 0.0, gen_amp = 1.0;
  int gen_sequences = 3, gen_steps = 20;
  std::uint64_t gen_seed = 0;
  gen->add_option("--graph", gen_graph, "graph JSON file")->required();
  gen->add_option("--eq", gen_eq, "diffusion | wave");
  gen->add_option("--alpha", gen_alpha, "diffusivity per step");
  gen->add_option("--c", gen_c, "wave speed per step");
  gen->add_option("--sequences", gen_sequences, "number of sequences");
  gen->add_option("--steps", gen_steps, "steps per sequence");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--noise-std", gen_noise, "observation noise sd");
  gen->add_option("--amplitude", gen_amp, "initial pulse height");
  gen->add_option("--normalization", gen_norm, "zscore | none (manifest setting)");
  gen->add_option("--out", gen_out, "output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "fit a model on a dataset");
  std::string tr_data, tr_out = "run";
  TrainFlags tr_flags;
  tr->add_option("--data", tr_data, "dataset manifest JSON")->required();
  add_train_flags(tr, tr_flags);
  tr->add_option("--out", tr_out, "output directory");

  // eval
  auto* ev = app.add_subcommand("eval", "score a checkpoint on the test split");
  std::string ev_data, ev_ck, ev_out;
  int ev_horizon = 1;
  double ev_alpha = 0.001;
  ev->add_option("--data", ev_data, "dataset manifest JSON")->required();
  ev->add_option("--checkpoint", ev_ck, "checkpoint JSON")->required();
  ev->add_option("--horizon", ev_horizon, "rollout length to score");
  ev->add_option("--alpha", ev_alpha, "latent diffusivity for the reported physics residual");
  ev->add_option("--out", ev_out, "also write the report here");

  // inductive
  auto* ind = app.add_subcommand("inductive", "train on one graph, evaluate on another");
  std::string ind_a, ind_b, ind_out;
  TrainFlags ind_flags;
  ind->add_option("--train-on", ind_a, "training dataset manifest")->required();
  ind->add_option("--eval-on", ind_b, "evaluation dataset manifest")->required();
  add_train_flags(ind, ind_flags);
  ind->add_option("--out", ind_out, "output directory");

  // horizon
  auto* hz = app.add_subcommand("horizon", "sweep training horizons over several seeds");
  std::string hz_data, hz_out;
  int hz_horizons = 10, hz_seeds = 5;
  TrainFlags hz_flags;
  hz->add_option("--data", hz_data, "dataset manifest JSON")->required();
  hz->add_option("--horizons", hz_horizons, "sweep horizons 1..N");
  hz->add_option("--seeds", hz_seeds, "runs per horizon");
  add_train_flags(hz, hz_flags);
  hz->add_option("--out", hz_out, "JSONL output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends exit 0; every usage problem is a config error
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(sim_graph, sim_eq, sim_alpha, sim_c, sim_steps, sim_init_node, sim_amp,
                          sim_seed, sim_out);
    if (gen->parsed())
      return cmd_gen_data(gen_graph, gen_eq, gen_alpha, gen_c, gen_sequences, gen_steps, gen_seed,
                          gen_noise, gen_amp, gen_norm, gen_out);
    if (tr->parsed()) {
      merge_config_file(tr, tr_flags);
      return cmd_train(tr_data, tr_flags, tr_out);
    }
    if (ev->parsed()) return cmd_eval(ev_data, ev_ck, ev_horizon, ev_alpha, ev_out);
    if (ind->parsed()) {
      merge_config_file(ind, ind_flags);
      return cmd_inductive(ind_a, ind_b, ind_flags, ind_out);
    }
    if (hz->parsed()) {
      merge_config_file(hz, hz_flags);
      return cmd_horizon(hz_data, hz_flags, hz_horizons, hz_seeds, hz_out);
    }
  } catch (const dpgn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case Errc::non_finite_state:
      case Errc::non_finite_loss:
      case Errc::non_finite_value:
        return kExitDiverged;
      default:
        return kExitConfig;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
