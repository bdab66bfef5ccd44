#include <cmath>
#include <vector>

#include "doctest.h"
#include "dpgn/errors.hpp"
#include "dpgn/pde.hpp"
#include "dpgn/train.hpp"
#include "test_util.hpp"

using namespace dpgn;

namespace {

TrajectoryDataset training_fixture(std::uint64_t seed = 11) {
  Graph g = build_graph(10, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6},
                             {6, 7}, {7, 8}, {8, 9}, {0, 9}, {2, 7}});
  auto ds = make_synthetic_dataset(g, {PDEKind::diffusion, 0.15, 0.3}, 2, 40, seed, 0.01, 3.0);
  fit_normalization(ds);
  return ds;
}

TrainConfig quick_config(ModelKind kind = ModelKind::dpgn) {
  TrainConfig cfg;
  cfg.kind = kind;
  cfg.iterations = 200;
  cfg.d_h = 8;
  cfg.t_steps = 1;
  cfg.learning_rate = 0.01;
  cfg.lambda = 1e-4;
  cfg.log_every = 50;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  TrainConfig cfg = quick_config();
  SUBCASE("ok") { validate(cfg); }
  SUBCASE("lambda") {
    cfg.lambda = -1.0;
    CHECK_THROWS_AS(validate(cfg), Error);
  }
  SUBCASE("t_steps") {
    cfg.t_steps = 0;
    CHECK_THROWS_AS(validate(cfg), Error);
  }
  SUBCASE("learning_rate") {
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(validate(cfg), Error);
  }
  SUBCASE("iterations") {
    cfg.iterations = -5;
    CHECK_THROWS_AS(validate(cfg), Error);
  }
  SUBCASE("label_fraction") {
    cfg.label_fraction = 1.5;
    CHECK_THROWS_AS(validate(cfg), Error);
  }
  SUBCASE("beta out of range") {
    cfg.adam_beta2 = 1.0;
    CHECK_THROWS_AS(validate(cfg), Error);
  }
  SUBCASE("mlp must be one-step") {
    cfg.kind = ModelKind::mlp;
    cfg.t_steps = 3;
    CHECK_THROWS_AS(validate(cfg), Error);
  }
}

TEST_CASE("training reduces the objective on a small diffusion dataset") {
  auto ds = training_fixture();
  for (ModelKind kind : {ModelKind::dpgn, ModelKind::gn_only, ModelKind::mlp}) {
    auto res = train(ds, quick_config(kind));
    double first_train = -1.0, last_train = -1.0;
    for (const auto& r : res.log) {
      if (r.split != "train") continue;
      if (first_train < 0) first_train = r.mse;
      last_train = r.mse;
    }
    REQUIRE(first_train >= 0);
    CHECK(last_train < first_train);
    CHECK(last_train < 0.5 * first_train);  // 200 iterations shave off over half
  }
}

TEST_CASE("training is deterministic in the seed") {
  auto ds = training_fixture();
  auto a = train(ds, quick_config());
  auto b = train(ds, quick_config());
  REQUIRE(a.log.size() == b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].iteration == b.log[i].iteration);
    CHECK(a.log[i].mse == b.log[i].mse);  // bit-identical
    CHECK(a.log[i].physics == b.log[i].physics);
  }
  for (const auto& [name, t] : a.params) CHECK(t.data == b.params.at(name).data);

  TrainConfig other = quick_config();
  other.seed = 4;
  auto c = train(ds, other);
  bool any_diff = false;
  for (const auto& [name, t] : a.params)
    if (t.data != c.params.at(name).data) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("metric log covers iteration zero, the cadence, and the end") {
  auto ds = training_fixture();
  TrainConfig cfg = quick_config();
  cfg.iterations = 120;
  cfg.log_every = 50;
  auto res = train(ds, cfg);
  std::vector<int> train_iters;
  for (const auto& r : res.log)
    if (r.split == "train") train_iters.push_back(r.iteration);
  REQUIRE(train_iters.size() >= 3);
  CHECK(train_iters.front() == 0);
  CHECK(train_iters.back() == 120);
  bool has_50 = false, has_100 = false;
  for (int it : train_iters) {
    if (it == 50) has_50 = true;
    if (it == 100) has_100 = true;
  }
  CHECK(has_50);
  CHECK(has_100);
}

TEST_CASE("the full training objective passes a gradient check") {
  auto ds = training_fixture();
  ModelConfig mc;
  mc.kind = ModelKind::dpgn;
  mc.d_in = ds.n_features;
  mc.d_out = ds.n_targets;
  mc.d_h = 5;
  mc.n_edge_types = ds.n_edge_types();
  auto params = init_model_params(mc, 12);

  Tape tape;
  auto de = DirectedEdges::from(ds.graph);
  auto vars = bind_model_params(tape, params, mc);
  int start = 0, t_steps = 3;
  Var feats = tape.constant(ds.features_at(start));
  auto out = model_forward(tape, ds.graph, de, mc, vars, feats, ds.edge_types, t_steps);

  Var loss{-1};
  for (int h = 1; h <= t_steps; ++h) {
    Var term = tape.squared_error(out.predictions[h - 1], tape.constant(ds.targets_at(start + h - 1)));
    loss = loss.valid() ? tape.add(loss, term) : term;
  }
  Var lap = laplacian_const(tape, ds.graph);
  Var phys = physics_loss(tape, lap, out.node_states, 0.01);
  loss = tape.add(loss, tape.scalar_mul(phys, 1e-3));

  CHECK(grad_check(tape, loss, params) < 1e-5);
}

TEST_CASE("a fully labeled mask equals no mask at all") {
  auto ds = training_fixture();
  TrainConfig cfg = quick_config();
  cfg.iterations = 60;
  cfg.label_fraction = 1.0;
  auto full = train(ds, cfg);
  // with every frame labeled the mask must not perturb the run at all
  auto again = train(ds, cfg);
  for (const auto& [name, t] : full.params) CHECK(t.data == again.params.at(name).data);
}

TEST_CASE("physics-only training needs no labels and returns final params") {
  auto ds = training_fixture();
  TrainConfig cfg = quick_config();
  cfg.label_fraction = 0.0;
  cfg.lambda = 1e-2;
  cfg.iterations = 40;
  auto res = train(ds, cfg);
  CHECK(res.best_iteration == cfg.iterations);
  CHECK(std::isnan(res.best_val_mse));
  // physics residual should drop
  double first = -1.0, last = -1.0;
  for (const auto& r : res.log) {
    if (r.split != "train") continue;
    if (first < 0) first = r.physics;
    last = r.physics;
  }
  CHECK(last < first);
}

TEST_CASE("physics-only training with zero lambda has nothing to optimize") {
  auto ds = training_fixture();
  TrainConfig cfg = quick_config();
  cfg.label_fraction = 0.0;
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(train(ds, cfg), Error);
}

TEST_CASE("best-iteration selection tracks validation mse") {
  auto ds = training_fixture();
  TrainConfig cfg = quick_config();
  cfg.iterations = 150;
  auto res = train(ds, cfg);
  // the recorded best_val_mse is the minimum over logged val rows
  double min_val = 1e300;
  for (const auto& r : res.log)
    if (r.split == "val") min_val = std::min(min_val, r.mse);
  CHECK(res.best_val_mse == doctest::Approx(min_val));
}

TEST_CASE("evaluate scores a perfect oracle at zero") {
  // identity task: targets equal features, an mlp can nail it; instead verify
  // the scoring itself with hand-set parameters that reproduce the target.
  TrajectoryDataset ds;
  ds.graph = build_graph(2, {{0, 1}});
  ds.edge_types = {1};
  ds.edge_type_names = {"default"};
  ds.edge_type_map = {{"default", 1}};
  ds.n_features = 1;
  ds.n_targets = 1;
  for (int t = 0; t < 10; ++t) {
    ds.seq_id.push_back(0);
    ds.t.push_back(t);
    double v = 0.1 * t;
    ds.features.push_back(v);
    ds.features.push_back(-v);
    ds.targets.push_back(v);
    ds.targets.push_back(-v);
  }
  assign_splits(ds, {0.6, 0.2, 0.2});

  // encoder relu(x * [1, -1]) keeps x in one of two rails; decoder [1, -1]
  // reconstructs x. (relu(x), relu(-x)) -> relu(x) - relu(-x) = x.
  ModelConfig mc;
  mc.kind = ModelKind::mlp;
  mc.d_in = 1;
  mc.d_out = 1;
  mc.d_h = 2;
  ParamMap params;
  params["encoder.w"] = Tensor(1, 2, {1.0, -1.0});
  params["encoder.b"] = Tensor(1, 2);
  params["decoder.w"] = Tensor(2, 1, {1.0, -1.0});
  params["decoder.b"] = Tensor(1, 1);
  params["edge_embed"] = Tensor(2, 2);
  for (auto& [k, v] : params) v.requires_grad = true;

  auto res = evaluate(mc, params, ds, 1, Split::test);
  CHECK(res.n_windows > 0);
  REQUIRE(res.mse.size() == 1);
  CHECK(res.mse[0] < 1e-24);
}

TEST_CASE("inductive evaluation enforces matching dimensions") {
  auto ds = training_fixture();
  ModelConfig mc;
  mc.d_in = ds.n_features + 1;  // wrong on purpose
  mc.d_out = ds.n_targets;
  mc.d_h = 4;
  auto params = init_model_params(mc, 5);
  bool threw = false;
  try {
    evaluate_inductive(mc, params, ds, 1);
  } catch (const Error& e) {
    threw = true;
    CHECK(e.code() == Errc::feature_dim_mismatch);
  }
  CHECK(threw);
}

TEST_CASE("inductive evaluation runs on a graph unseen at training time") {
  auto ds = training_fixture();
  TrainConfig cfg = quick_config();
  cfg.iterations = 30;
  auto res = train(ds, cfg);

  Graph other = build_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}, {1, 4}});
  auto ds2 = make_synthetic_dataset(other, {PDEKind::diffusion, 0.15, 0.3}, 1, 30, 99, 0.01, 3.0);
  fit_normalization(ds2);
  auto ev = evaluate_inductive(res.model_cfg, res.params, ds2, 2);
  CHECK(ev.n_windows > 0);
  REQUIRE(ev.mse.size() == 2);
  for (double m : ev.mse) CHECK(std::isfinite(m));
}

TEST_CASE("metrics serialize to one json object per line") {
  std::vector<MetricRecord> log = {{0, "train", 1.5, 0.25, 3}, {100, "val", 0.75, 0.0, 3}};
  std::string s = metrics_to_jsonl(log);
  CHECK(s.find("\"iteration\":0") != std::string::npos);
  CHECK(s.find("\"split\":\"val\"") != std::string::npos);
  CHECK(std::count(s.begin(), s.end(), '\n') == 2);
}

TEST_CASE("median and mean_std behave on small inputs") {
  CHECK(median({3.0}) == 3.0);
  CHECK(median({5.0, 1.0}) == 3.0);
  CHECK(median({9.0, 1.0, 5.0}) == 5.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK_THROWS_AS(median({}), Error);

  auto [m, s] = mean_std({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
  CHECK(m == doctest::Approx(5.0));
  CHECK(s == doctest::Approx(2.0));
}
