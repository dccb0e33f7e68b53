#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "hypball/data.hpp"
#include "hypball/errors.hpp"
#include "hypball/training.hpp"

using namespace hypball;
using vm::Vec;

namespace {

// Desk-scale dataset + config so every training test stays fast.
data::Dataset tiny_dataset(int modalities = 1) {
  data::HierarchySpec spec;
  spec.depth = 1;
  spec.branching = 2;
  spec.samples_per_leaf = 40;
  spec.bonafide_count = 80;
  spec.latent_dim = 6;
  spec.modalities = modalities;
  spec.modality_widths = std::vector<int>(static_cast<std::size_t>(modalities), 6);
  spec.seed = 50;
  return data::generate_synthetic(spec);
}

train::TrainConfig tiny_config() {
  train::TrainConfig cfg;
  cfg.dim = 8;
  cfg.hidden = 16;
  cfg.batch_size = 32;
  cfg.epochs = 3;
  cfg.lr = 1e-3;
  cfg.seed = 99;
  return cfg;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/hypball_train_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("learning rate schedule decays stepwise") {
  train::TrainConfig cfg;
  CHECK(train::lr_at_epoch(cfg, 0) == 1e-4);
  CHECK(train::lr_at_epoch(cfg, 9) == 1e-4);
  CHECK(train::lr_at_epoch(cfg, 10) == doctest::Approx(8e-5).epsilon(1e-15));
  CHECK(train::lr_at_epoch(cfg, 20) == doctest::Approx(6.4e-5).epsilon(1e-15));
  CHECK_THROWS_AS(train::lr_at_epoch(cfg, -1), UsageError);
}

TEST_CASE("adam: zero gradient is a no-op without weight decay") {
  nn::Param p{"p", {1.0, -2.0}};
  std::vector<nn::Param*> params = {&p};
  train::AdamState state;
  state.init(params);
  train::adam_step(params, {Vec{0.0, 0.0}}, state, 0.1, 0.0);
  CHECK(p.value == Vec{1.0, -2.0});
}

TEST_CASE("adam: first step moves by about -lr * sign(gradient)") {
  nn::Param p{"p", {1.0, -2.0, 0.5}};
  std::vector<nn::Param*> params = {&p};
  train::AdamState state;
  state.init(params);
  const double lr = 0.01;
  train::adam_step(params, {Vec{0.3, -1.7, 2.5}}, state, lr, 0.0);
  // Bias correction makes m_hat / (sqrt(v_hat) + eps) ~ sign(g) on step one.
  CHECK(p.value[0] == doctest::Approx(1.0 - lr).epsilon(1e-6));
  CHECK(p.value[1] == doctest::Approx(-2.0 + lr).epsilon(1e-6));
  CHECK(p.value[2] == doctest::Approx(0.5 - lr).epsilon(1e-6));
}

TEST_CASE("adam: identical inputs give bitwise-identical trajectories") {
  auto run = [] {
    nn::Param p{"p", {0.4, -0.8}};
    std::vector<nn::Param*> params = {&p};
    train::AdamState st;
    st.init(params);
    for (int i = 0; i < 25; ++i)
      train::adam_step(params, {Vec{0.1 * i, -0.05 * i}}, st, 1e-2, 1e-4);
    return p.value;
  };
  CHECK(run() == run());
}

TEST_CASE("adam rejects bad shapes and non-finite gradients") {
  nn::Param p{"p", {1.0, 2.0}};
  std::vector<nn::Param*> params = {&p};
  train::AdamState state;
  state.init(params);
  CHECK_THROWS_AS(train::adam_step(params, {Vec{1.0}}, state, 0.1, 0.0), UsageError);
  CHECK_THROWS_AS(train::adam_step(params, {Vec{1.0, std::nan("")}}, state, 0.1, 0.0),
                  TrainingError);
}

TEST_CASE("weight decay pulls parameters towards zero") {
  nn::Param p{"p", {5.0}};
  std::vector<nn::Param*> params = {&p};
  train::AdamState state;
  state.init(params);
  train::adam_step(params, {Vec{0.0}}, state, 0.1, 1e-2);
  CHECK(p.value[0] < 5.0);
  CHECK(p.value[0] > 0.0);
}

TEST_CASE("training config validation") {
  train::TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = train::TrainConfig{};
  cfg.lr = -1.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = train::TrainConfig{};
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
}

TEST_CASE("seeded unimodal training learns and repeats exactly") {
  const auto ds = tiny_dataset();
  const auto sp = data::split(ds, data::SplitKind::kSeen, "", 99);
  const auto cfg = tiny_config();

  const auto run1 = train::train_unimodal(cfg, ds, sp);
  const auto run2 = train::train_unimodal(cfg, ds, sp);

  REQUIRE(run1.log.rows.size() == 3);
  for (std::size_t i = 0; i < run1.log.rows.size(); ++i) {
    CHECK(run1.log.rows[i].train_loss == doctest::Approx(run2.log.rows[i].train_loss).epsilon(1e-12));
    CHECK(run1.log.rows[i].dev_auc == doctest::Approx(run2.log.rows[i].dev_auc).epsilon(1e-12));
    CHECK(std::isfinite(run1.log.rows[i].train_loss));
    CHECK(run1.log.rows[i].dev_acer >= 0.0);
    CHECK(run1.log.rows[i].dev_acer <= 1.0);
  }
  // Same seed, same data: the loss trajectory must descend across epochs.
  CHECK(run1.log.rows.back().train_loss < run1.log.rows.front().train_loss);

  // Embedding norms stay under the clip bound throughout.
  const double bound = cfg.curvature().ball_radius() * (1.0 - cfg.alpha);
  for (const auto& row : run1.log.rows) CHECK(row.max_embed_norm <= bound + 1e-12);
}

TEST_CASE("disabling the contrastive term reduces to the pure BCE objective") {
  const auto ds = tiny_dataset();
  const auto sp = data::split(ds, data::SplitKind::kSeen, "", 12);
  auto cfg = tiny_config();
  cfg.epochs = 2;

  auto none_cfg = cfg;
  none_cfg.contrastive = loss::ContrastiveMode::kNone;
  auto zero_cfg = cfg;
  zero_cfg.weights.lambda2 = 0.0;

  const auto run_none = train::train_unimodal(none_cfg, ds, sp);
  const auto run_zero = train::train_unimodal(zero_cfg, ds, sp);
  for (std::size_t i = 0; i < run_none.log.rows.size(); ++i)
    CHECK(run_none.log.rows[i].train_loss ==
          doctest::Approx(run_zero.log.rows[i].train_loss).epsilon(1e-12));
}

TEST_CASE("baseline mode trains deterministically too") {
  const auto ds = tiny_dataset();
  const auto sp = data::split(ds, data::SplitKind::kSeen, "", 7);
  auto cfg = tiny_config();
  cfg.mode = train::Mode::kEuclideanBaseline;
  cfg.epochs = 2;

  const auto r1 = train::train_unimodal(cfg, ds, sp);
  const auto r2 = train::train_unimodal(cfg, ds, sp);
  for (std::size_t i = 0; i < r1.log.rows.size(); ++i)
    CHECK(r1.log.rows[i].train_loss == doctest::Approx(r2.log.rows[i].train_loss).epsilon(1e-12));
  CHECK(std::isfinite(r1.log.rows.back().dev_auc));
}

TEST_CASE("multimodal training descends, logs the shared-distance term") {
  const auto ds = tiny_dataset(2);
  const auto sp = data::split(ds, data::SplitKind::kSeen, "", 21);
  auto cfg = tiny_config();
  cfg.batch_size = 16;
  cfg.epochs = 3;

  const auto run = train::train_multimodal(cfg, ds, sp);
  REQUIRE(run.log.rows.size() == 3);
  for (const auto& row : run.log.rows) {
    CHECK(std::isfinite(row.train_loss));
    CHECK(row.dis_loss >= 0.0);
  }
  CHECK(run.log.rows.back().train_loss < run.log.rows.front().train_loss);

  // Multimodal training requires the second modality.
  const auto uni = tiny_dataset(1);
  const auto usp = data::split(uni, data::SplitKind::kSeen, "", 21);
  CHECK_THROWS_AS(train::train_multimodal(cfg, uni, usp), ProtocolError);
}

TEST_CASE("per-sample evaluation obeys the clip bound and scores in (0,1)") {
  const auto ds = tiny_dataset();
  const auto sp = data::split(ds, data::SplitKind::kSeen, "", 3);
  auto cfg = tiny_config();
  cfg.epochs = 1;
  const auto run = train::train_unimodal(cfg, ds, sp);

  const double bound = cfg.curvature().ball_radius() * (1.0 - cfg.alpha);
  for (const auto& s : ds.samples) {
    const auto ev = train::eval_sample(run.model, s.features.at("m1"));
    CHECK(vm::norm(ev.embedding) <= bound + 1e-12);
    CHECK(ev.score > 0.0);
    CHECK(ev.score < 1.0);
  }
}

TEST_CASE("log csv uses the pinned five-column format") {
  train::TrainLog log;
  log.rows.push_back({0, 1e-4, 0.75, 0.9, 0.1, 0.0, 0.0, 0.0, 0});
  log.rows.push_back({1, 1e-4, 0.5, 0.95, 0.05, 0.0, 0.0, 0.0, 0});
  TempFile tmp("log.csv");
  train::write_log_csv(tmp.path, log);

  std::ifstream f(tmp.path);
  std::string header, row0;
  std::getline(f, header);
  std::getline(f, row0);
  CHECK(header == "epoch,lr,train_loss,dev_auc,dev_acer");
  CHECK(row0.rfind("0,", 0) == 0);
  CHECK(row0.find("0.75") != std::string::npos);
  int rows = 1;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}
