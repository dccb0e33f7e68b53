#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypball/data.hpp"
#include "hypball/geometry.hpp"
#include "hypball/layers.hpp"
#include "hypball/losses.hpp"
#include "hypball/multimodal.hpp"

namespace hypball::train {

using vm::Vec;

// euclidean-baseline swaps exp-map -> identity, the geodesic classifier ->
// a linear head, and geodesic distances -> Euclidean ones, keeping data
// order, batching, clipping bound, optimizer, and weights identical.
enum class Mode { kHyperbolic, kEuclideanBaseline };

struct TrainConfig {
  double c = 0.1;
  double max_norm_eps = 1e-3;
  double alpha = 0.1;
  int dim = 128;
  int hidden = 64;
  int batch_size = 64;  // 32 is the usual multimodal setting
  int epochs = 30;
  double lr = 1e-4;
  double lr_decay = 0.8;
  int lr_decay_every = 10;
  double weight_decay = 1e-5;
  loss::LossWeights weights;
  std::uint64_t seed = 7;
  Mode mode = Mode::kHyperbolic;
  loss::ContrastiveMode contrastive = loss::ContrastiveMode::kBF;
  std::string modality1 = "m1";
  std::string modality2 = "m2";  // multimodal only
  double dev_bpcer_target = 0.01;

  geom::Curvature curvature() const { return geom::Curvature(c, max_norm_eps); }
  void validate() const;
};

// initial_lr * decay^(epoch / every), integer division; epoch counts from 0.
double lr_at_epoch(const TrainConfig& cfg, int epoch);

struct AdamState {
  std::vector<Vec> m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void init(const std::vector<nn::Param*>& params);
};

// Bias-corrected Adam with weight decay folded into the gradient (coupled
// L2). Non-finite gradients abort with TrainingError.
void adam_step(const std::vector<nn::Param*>& params, const std::vector<Vec>& grads,
               AdamState& state, double lr, double weight_decay);

// Fig.-2-shaped pipeline: toy backbone -> linear FC to the embedding width ->
// (hyperbolic) exp_0 + clip + geodesic head, or (baseline) clip + linear head.
struct UnimodalModel {
  geom::Curvature curvature;
  double alpha = 0.1;
  int dim = 0;
  Mode mode = Mode::kHyperbolic;
  nn::Mlp backbone;
  nn::AffineLayer fc;
  nn::HypBLRHead head;      // hyperbolic mode
  nn::LinearHead lin_head;  // baseline mode

  void collect(std::vector<nn::Param*>& params);
};

UnimodalModel make_unimodal_model(int input_width, const TrainConfig& cfg, Rng& rng);

// Baseline counterpart of mm::MultimodalModel: identical decomposition,
// plain vector addition instead of the gyrovector fusion, linear heads.
struct MultimodalBaselineModel {
  geom::Curvature curvature;  // only sets the norm cap
  double alpha = 0.1;
  int dim = 0;
  nn::Mlp backbone1, backbone2;
  nn::AffineLayer fc1, fc2;
  nn::Mlp s_sha, s_spe1, s_spe2;
  nn::LinearHead head_sha, head_spe1, head_spe2, head_fus;

  void collect(std::vector<nn::Param*>& params);
};

MultimodalBaselineModel make_multimodal_baseline_model(int in1, int in2, const TrainConfig& cfg,
                                                       Rng& rng);

// Per-epoch record. The CSV log writes the first five fields; the rest are
// in-memory diagnostics (mean batch gradient norm, largest embedding norm
// seen during training forwards, mean shared-distance term, batches whose
// contrastive term was skipped for lack of pairs).
struct TrainLogRow {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double dev_auc = 0.0;
  double dev_acer = 0.0;
  double grad_norm = 0.0;
  double max_embed_norm = 0.0;
  double dis_loss = 0.0;
  int skipped_contrastive = 0;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
};

// Columns: epoch,lr,train_loss,dev_auc,dev_acer.
void write_log_csv(const std::string& path, const TrainLog& log);

struct UnimodalRun {
  UnimodalModel model;
  TrainLog log;
};

UnimodalRun train_unimodal(const TrainConfig& cfg, const data::Dataset& ds,
                           const data::ProtocolSplit& split);

struct MultimodalRun {
  Mode mode = Mode::kHyperbolic;
  mm::MultimodalModel hyp;
  MultimodalBaselineModel baseline;
  TrainLog log;
};

MultimodalRun train_multimodal(const TrainConfig& cfg, const data::Dataset& ds,
                               const data::ProtocolSplit& split);

// Double-path per-sample forwards for scoring, thresholding, and embedding
// export. score is the bonafide probability of the deployment head.
struct SampleEval {
  Vec embedding;
  double score = 0.0;
};

SampleEval eval_sample(const UnimodalModel& m, const Vec& x);
SampleEval eval_sample(const mm::MultimodalModel& m, const Vec& x1, const Vec& x2);
SampleEval eval_sample(const MultimodalBaselineModel& m, const Vec& x1, const Vec& x2);

}  // namespace hypball::train
