#include "hypball/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "hypball/errors.hpp"
#include "hypball/metrics.hpp"

namespace hypball::train {

namespace {

// Batch shuffling draws from its own stream so that model construction
// (which differs between modes) cannot perturb the data order.
constexpr std::uint64_t kBatchSeedSalt = 0x9e3779b97f4a7c15ull;

const Vec& feature_of(const data::Sample* s, const std::string& modality) {
  auto it = s->features.find(modality);
  if (it == s->features.end())
    throw ProtocolError("sample " + s->id + " lacks modality " + modality);
  return it->second;
}

// Stratified batches: bonafide and attack samples are shuffled separately and
// dealt round-robin, so every batch keeps roughly the dataset's class mix and
// the contrastive term almost always has its pairs.
std::vector<std::vector<const data::Sample*>> plan_batches(
    const std::vector<const data::Sample*>& samples, int batch_size, Rng& rng) {
  std::vector<const data::Sample*> bona, att;
  for (const data::Sample* s : samples) (s->bonafide() ? bona : att).push_back(s);
  rng.shuffle(bona);
  rng.shuffle(att);
  const std::size_t n_batches =
      std::max<std::size_t>(1, (samples.size() + batch_size - 1) / batch_size);
  std::vector<std::vector<const data::Sample*>> groups(n_batches);
  for (std::size_t i = 0; i < bona.size(); ++i) groups[i % n_batches].push_back(bona[i]);
  for (std::size_t i = 0; i < att.size(); ++i) groups[i % n_batches].push_back(att[i]);
  for (auto& g : groups) rng.shuffle(g);
  return groups;
}

// Contrastive objective on plain Euclidean distances; the baseline stand-in
// for the geodesic version, with the same pair structure and prefactors.
ad::Var euclid_pair_average(ad::Tape& t, const std::vector<ad::Var>& anchors,
                            const std::vector<ad::Var>& negatives, double tau) {
  const std::size_t n = anchors.size();
  ad::Var total = t.scalar(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    ad::Var neg_sum = t.scalar(0.0);
    for (const auto& y : negatives) {
      ad::Var d = t.norm(t.sub(anchors[i], y));
      neg_sum = t.add(neg_sum, t.exp(t.scale_const(d, -1.0 / tau)));
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      ad::Var d = t.norm(t.sub(anchors[i], anchors[j]));
      ad::Var denom = t.add(t.exp(t.scale_const(d, -1.0 / tau)), neg_sum);
      total = t.add(total, t.add(t.scale_const(d, 1.0 / tau), t.log(denom)));
    }
  }
  return t.scale_const(total, 1.0 / static_cast<double>(n));
}

ad::Var euclid_contrastive(ad::Tape& t, const std::vector<ad::Var>& bona,
                           const std::vector<ad::Var>& att, loss::ContrastiveMode mode,
                           double tau) {
  const bool need_bf = mode == loss::ContrastiveMode::kBF || mode == loss::ContrastiveMode::kBA;
  const bool need_att = mode == loss::ContrastiveMode::kAtt || mode == loss::ContrastiveMode::kBA;
  if (mode == loss::ContrastiveMode::kNone) throw UsageError("contrastive: mode none");
  if (need_bf && (bona.size() < 2 || att.empty()))
    throw ProtocolError("contrastive: bonafide pairs need >=2 bonafide and >=1 attack");
  if (need_att && (att.size() < 2 || bona.empty()))
    throw ProtocolError("contrastive: attack pairs need >=2 attacks and >=1 bonafide");
  ad::Var out = t.scalar(0.0);
  if (need_bf) out = t.add(out, euclid_pair_average(t, bona, att, tau));
  if (need_att) out = t.add(out, euclid_pair_average(t, att, bona, tau));
  return out;
}

ad::Var batch_contrastive(ad::Tape& t, Mode mode, const std::vector<ad::Var>& bona,
                          const std::vector<ad::Var>& att, loss::ContrastiveMode cmode,
                          double tau, const geom::Curvature& k) {
  if (mode == Mode::kHyperbolic) return loss::contrastive_loss(t, bona, att, cmode, tau, k);
  return euclid_contrastive(t, bona, att, cmode, tau);
}

double gather_grads(nn::ParamBinding& b, const std::vector<nn::Param*>& params,
                    std::vector<Vec>& grads) {
  grads.clear();
  grads.reserve(params.size());
  double sq = 0.0;
  for (const nn::Param* p : params) {
    Vec g = b.grad_of(*p);
    sq += vm::norm_sq(g);
    grads.push_back(std::move(g));
  }
  return std::sqrt(sq);
}

struct BatchStats {
  double loss = 0.0;
  double grad_norm = 0.0;
  double max_embed_norm = 0.0;
  double dis = 0.0;
  int skipped_contrastive = 0;
};

std::pair<double, double> dev_metrics(const metrics::ScoreSet& s, double bpcer_target) {
  const double thr = metrics::threshold_at_bpcer(s.bonafide, bpcer_target);
  return {metrics::roc_auc(s), metrics::acer(s, thr).acer};
}

template <typename StepFn, typename DevFn>
TrainLog run_epochs(const TrainConfig& cfg, const std::vector<const data::Sample*>& train_set,
                    StepFn&& step, DevFn&& dev) {
  Rng batch_rng(cfg.seed ^ kBatchSeedSalt);
  TrainLog log;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg, epoch);
    auto groups = plan_batches(train_set, cfg.batch_size, batch_rng);
    TrainLogRow row;
    row.epoch = epoch;
    row.lr = lr;
    double loss_sum = 0.0, grad_sum = 0.0, dis_sum = 0.0;
    for (const auto& g : groups) {
      BatchStats st = step(g, lr);
      loss_sum += st.loss;
      grad_sum += st.grad_norm;
      dis_sum += st.dis;
      row.max_embed_norm = std::max(row.max_embed_norm, st.max_embed_norm);
      row.skipped_contrastive += st.skipped_contrastive;
    }
    const double nb = static_cast<double>(groups.size());
    row.train_loss = loss_sum / nb;
    row.grad_norm = grad_sum / nb;
    row.dis_loss = dis_sum / nb;
    std::tie(row.dev_auc, row.dev_acer) = dev();
    if (!std::isfinite(row.train_loss))
      throw TrainingError("non-finite epoch loss at epoch " + std::to_string(epoch));
    log.rows.push_back(row);
  }
  return log;
}

struct SampleTrace {
  ad::Var emb;
  ad::Var p1;
};

SampleTrace unimodal_trace(ad::Tape& t, nn::ParamBinding& b, const UnimodalModel& m,
                           const Vec& x) {
  ad::Var f = m.fc.forward(t, b, m.backbone.forward(t, b, t.leaf(x)));
  if (m.mode == Mode::kHyperbolic) {
    ad::Var emb =
        ad::clip_to_ball(t, ad::exp_map_origin(t, f, m.curvature), m.alpha, m.curvature);
    return {emb, nn::hyp_blr_probs(t, m.head.scores(t, b, emb)).second};
  }
  ad::Var emb = ad::clip_to_ball(t, f, m.alpha, m.curvature);
  return {emb, nn::hyp_blr_probs(t, m.lin_head.scores(t, b, emb)).second};
}

mm::MultimodalTrace baseline_trace(ad::Tape& t, nn::ParamBinding& b,
                                   const MultimodalBaselineModel& m, const Vec& x1,
                                   const Vec& x2) {
  if (x1.empty() || x2.empty()) throw ProtocolError("multimodal forward: a modality is missing");
  mm::MultimodalTrace tr;
  tr.f1 = m.fc1.forward(t, b, m.backbone1.forward(t, b, t.leaf(x1)));
  tr.f2 = m.fc2.forward(t, b, m.backbone2.forward(t, b, t.leaf(x2)));
  tr.f_sha = m.s_sha.forward(t, b, t.concat(tr.f1, tr.f2));
  tr.f_spe1 = m.s_spe1.forward(t, b, t.sub(tr.f1, tr.f_sha));
  tr.f_spe2 = m.s_spe2.forward(t, b, t.sub(tr.f2, tr.f_sha));
  tr.emb_sha = ad::clip_to_ball(t, tr.f_sha, m.alpha, m.curvature);
  tr.emb_spe1 = ad::clip_to_ball(t, tr.f_spe1, m.alpha, m.curvature);
  tr.emb_spe2 = ad::clip_to_ball(t, tr.f_spe2, m.alpha, m.curvature);
  ad::Var fused = t.add(tr.emb_sha, t.add(tr.emb_spe1, tr.emb_spe2));
  tr.emb_fused = ad::clip_to_ball(t, fused, m.alpha, m.curvature);
  tr.p1_sha = nn::hyp_blr_probs(t, m.head_sha.scores(t, b, tr.emb_sha)).second;
  tr.p1_spe1 = nn::hyp_blr_probs(t, m.head_spe1.scores(t, b, tr.emb_spe1)).second;
  tr.p1_spe2 = nn::hyp_blr_probs(t, m.head_spe2.scores(t, b, tr.emb_spe2)).second;
  tr.p1_fused = nn::hyp_blr_probs(t, m.head_fus.scores(t, b, tr.emb_fused)).second;
  return tr;
}

double track_norm(const ad::Tape& t, ad::Var v) {
  auto span = t.value(v);
  double sq = 0.0;
  for (double x : span) sq += x * x;
  return std::sqrt(sq);
}

template <typename Model>
BatchStats unimodal_step(Model& model, const std::vector<nn::Param*>& params, AdamState& st,
                         const TrainConfig& cfg, const std::vector<const data::Sample*>& batch,
                         double lr) {
  ad::Tape t;
  nn::ParamBinding b(t);
  std::vector<ad::Var> bona_emb, att_emb;
  ad::Var bce_sum = t.scalar(0.0);
  BatchStats stats;
  for (const data::Sample* s : batch) {
    SampleTrace tr = unimodal_trace(t, b, model, feature_of(s, cfg.modality1));
    bce_sum = t.add(bce_sum, loss::hyp_bce(t, tr.p1, s->label));
    (s->bonafide() ? bona_emb : att_emb).push_back(tr.emb);
    stats.max_embed_norm = std::max(stats.max_embed_norm, track_norm(t, tr.emb));
  }
  ad::Var bce = t.scale_const(bce_sum, 1.0 / static_cast<double>(batch.size()));
  ad::Var contrast = t.scalar(0.0);
  if (cfg.contrastive != loss::ContrastiveMode::kNone) {
    try {
      contrast = batch_contrastive(t, cfg.mode, bona_emb, att_emb, cfg.contrastive,
                                   cfg.weights.tau, model.curvature);
    } catch (const ProtocolError&) {
      stats.skipped_contrastive = 1;
    }
  }
  ad::Var total = loss::unimodal_total_loss(t, bce, contrast, cfg.weights);
  stats.loss = t.value_scalar(total);
  if (!std::isfinite(stats.loss)) throw TrainingError("non-finite batch loss");
  t.backward(total);
  std::vector<Vec> grads;
  stats.grad_norm = gather_grads(b, params, grads);
  adam_step(params, grads, st, lr, cfg.weight_decay);
  return stats;
}

template <typename Model, typename TraceFn>
BatchStats multimodal_step(Model& model, TraceFn&& trace, const std::vector<nn::Param*>& params,
                           AdamState& st, const TrainConfig& cfg,
                           const std::vector<const data::Sample*>& batch, double lr) {
  ad::Tape t;
  nn::ParamBinding b(t);
  std::vector<ad::Var> f_sha, f1, f2;
  std::vector<ad::Var> sha_b, sha_a, spe1_b, spe1_a, spe2_b, spe2_a, fus_b, fus_a;
  ad::Var bce_sha = t.scalar(0.0), bce_spe1 = t.scalar(0.0), bce_spe2 = t.scalar(0.0),
          bce_fus = t.scalar(0.0);
  BatchStats stats;
  for (const data::Sample* s : batch) {
    mm::MultimodalTrace tr =
        trace(t, b, feature_of(s, cfg.modality1), feature_of(s, cfg.modality2));
    f_sha.push_back(tr.f_sha);
    f1.push_back(tr.f1);
    f2.push_back(tr.f2);
    bce_sha = t.add(bce_sha, loss::hyp_bce(t, tr.p1_sha, s->label));
    bce_spe1 = t.add(bce_spe1, loss::hyp_bce(t, tr.p1_spe1, s->label));
    bce_spe2 = t.add(bce_spe2, loss::hyp_bce(t, tr.p1_spe2, s->label));
    bce_fus = t.add(bce_fus, loss::hyp_bce(t, tr.p1_fused, s->label));
    (s->bonafide() ? sha_b : sha_a).push_back(tr.emb_sha);
    (s->bonafide() ? spe1_b : spe1_a).push_back(tr.emb_spe1);
    (s->bonafide() ? spe2_b : spe2_a).push_back(tr.emb_spe2);
    (s->bonafide() ? fus_b : fus_a).push_back(tr.emb_fused);
    for (ad::Var emb : {tr.emb_sha, tr.emb_spe1, tr.emb_spe2, tr.emb_fused})
      stats.max_embed_norm = std::max(stats.max_embed_norm, track_norm(t, emb));
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  ad::Var dis = loss::distance_loss(t, f_sha, f1, f2);
  ad::Var decom_bce = t.scale_const(t.add(bce_sha, t.add(bce_spe1, bce_spe2)), inv_n);
  ad::Var fus_bce = t.scale_const(bce_fus, inv_n);
  ad::Var decom_bf = t.scalar(0.0);
  ad::Var fus_bf = t.scalar(0.0);
  if (cfg.contrastive != loss::ContrastiveMode::kNone) {
    try {
      // All heads see the same class partition, so feasibility is shared.
      ad::Var c_sha = batch_contrastive(t, cfg.mode, sha_b, sha_a, cfg.contrastive,
                                        cfg.weights.tau, model.curvature);
      ad::Var c_spe1 = batch_contrastive(t, cfg.mode, spe1_b, spe1_a, cfg.contrastive,
                                         cfg.weights.tau, model.curvature);
      ad::Var c_spe2 = batch_contrastive(t, cfg.mode, spe2_b, spe2_a, cfg.contrastive,
                                         cfg.weights.tau, model.curvature);
      decom_bf = t.add(c_sha, t.add(c_spe1, c_spe2));
      fus_bf = batch_contrastive(t, cfg.mode, fus_b, fus_a, cfg.contrastive, cfg.weights.tau,
                                 model.curvature);
    } catch (const ProtocolError&) {
      decom_bf = t.scalar(0.0);
      fus_bf = t.scalar(0.0);
      stats.skipped_contrastive = 1;
    }
  }
  ad::Var total = loss::multimodal_total_loss(t, dis, decom_bce, decom_bf, fus_bf, fus_bce,
                                              cfg.weights);
  stats.loss = t.value_scalar(total);
  stats.dis = t.value_scalar(dis);
  if (!std::isfinite(stats.loss)) throw TrainingError("non-finite batch loss");
  t.backward(total);
  std::vector<Vec> grads;
  stats.grad_norm = gather_grads(b, params, grads);
  adam_step(params, grads, st, lr, cfg.weight_decay);
  return stats;
}

template <typename ScoreFn>
metrics::ScoreSet score_samples(const std::vector<const data::Sample*>& samples,
                                ScoreFn&& score_of) {
  metrics::ScoreSet out;
  for (const data::Sample* s : samples)
    (s->bonafide() ? out.bonafide : out.attacks).push_back(score_of(s));
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw UsageError("config: c must be > 0");
  if (!(alpha >= 0.0) || alpha >= 1.0) throw UsageError("config: alpha must be in [0, 1)");
  if (dim < 1 || hidden < 1 || batch_size < 1 || epochs < 1)
    throw UsageError("config: dim/hidden/batch_size/epochs must be positive");
  if (!(lr > 0.0) || !(lr_decay > 0.0) || lr_decay > 1.0 || lr_decay_every < 1)
    throw UsageError("config: lr must be > 0 and decay in (0, 1] with a positive period");
  if (!(weight_decay >= 0.0)) throw UsageError("config: weight_decay must be >= 0");
  if (!(dev_bpcer_target > 0.0) || dev_bpcer_target >= 1.0)
    throw UsageError("config: dev_bpcer_target must be in (0, 1)");
  if (modality1.empty()) throw UsageError("config: modality1 must be named");
  weights.validate();
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  if (epoch < 0) throw UsageError("lr_at_epoch: epoch must be >= 0");
  return cfg.lr * std::pow(cfg.lr_decay, epoch / cfg.lr_decay_every);
}

void AdamState::init(const std::vector<nn::Param*>& params) {
  m.clear();
  v.clear();
  for (const nn::Param* p : params) {
    m.emplace_back(p->value.size(), 0.0);
    v.emplace_back(p->value.size(), 0.0);
  }
  step = 0;
}

void adam_step(const std::vector<nn::Param*>& params, const std::vector<Vec>& grads,
               AdamState& state, double lr, double weight_decay) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw UsageError("adam_step: parameter/gradient/state shapes disagree");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].size() != params[i]->value.size())
      throw UsageError("adam_step: gradient shaped unlike its parameter");
    if (!vm::all_finite(grads[i]))
      throw TrainingError("non-finite gradient for " + params[i]->name);
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Vec& p = params[i]->value;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = grads[i][j] + weight_decay * p[j];
      state.m[i][j] = state.beta1 * state.m[i][j] + (1.0 - state.beta1) * g;
      state.v[i][j] = state.beta2 * state.v[i][j] + (1.0 - state.beta2) * g * g;
      const double m_hat = state.m[i][j] / bc1;
      const double v_hat = state.v[i][j] / bc2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

void UnimodalModel::collect(std::vector<nn::Param*>& params) {
  backbone.collect(params);
  fc.collect(params);
  if (mode == Mode::kHyperbolic)
    head.collect(params);
  else
    lin_head.collect(params);
}

UnimodalModel make_unimodal_model(int input_width, const TrainConfig& cfg, Rng& rng) {
  if (input_width < 1) throw UsageError("make_unimodal_model: input width must be positive");
  UnimodalModel m;
  m.curvature = cfg.curvature();
  m.alpha = cfg.alpha;
  m.dim = cfg.dim;
  m.mode = cfg.mode;
  m.backbone = nn::make_toy_backbone("backbone", input_width, cfg.hidden, rng);
  m.fc = nn::make_affine("fc", cfg.hidden, cfg.dim, nn::Activation::kNone, rng);
  if (cfg.mode == Mode::kHyperbolic)
    m.head = nn::make_hyp_blr_head("head", cfg.dim, m.curvature, rng);
  else
    m.lin_head = nn::make_linear_head("head", cfg.dim, rng);
  return m;
}

void MultimodalBaselineModel::collect(std::vector<nn::Param*>& params) {
  backbone1.collect(params);
  fc1.collect(params);
  backbone2.collect(params);
  fc2.collect(params);
  s_sha.collect(params);
  s_spe1.collect(params);
  s_spe2.collect(params);
  head_sha.collect(params);
  head_spe1.collect(params);
  head_spe2.collect(params);
  head_fus.collect(params);
}

MultimodalBaselineModel make_multimodal_baseline_model(int in1, int in2, const TrainConfig& cfg,
                                                       Rng& rng) {
  if (in1 < 1 || in2 < 1)
    throw UsageError("make_multimodal_baseline_model: input widths must be positive");
  MultimodalBaselineModel m;
  m.curvature = cfg.curvature();
  m.alpha = cfg.alpha;
  m.dim = cfg.dim;
  m.backbone1 = nn::make_toy_backbone("backbone1", in1, cfg.hidden, rng);
  m.fc1 = nn::make_affine("fc1", cfg.hidden, cfg.dim, nn::Activation::kNone, rng);
  m.backbone2 = nn::make_toy_backbone("backbone2", in2, cfg.hidden, rng);
  m.fc2 = nn::make_affine("fc2", cfg.hidden, cfg.dim, nn::Activation::kNone, rng);
  m.s_sha = nn::make_refiner("s_sha", 2 * cfg.dim, cfg.dim, rng);
  m.s_spe1 = nn::make_refiner("s_spe1", cfg.dim, cfg.dim, rng);
  m.s_spe2 = nn::make_refiner("s_spe2", cfg.dim, cfg.dim, rng);
  m.head_sha = nn::make_linear_head("head_sha", cfg.dim, rng);
  m.head_spe1 = nn::make_linear_head("head_spe1", cfg.dim, rng);
  m.head_spe2 = nn::make_linear_head("head_spe2", cfg.dim, rng);
  m.head_fus = nn::make_linear_head("head_fus", cfg.dim, rng);
  return m;
}

void write_log_csv(const std::string& path, const TrainLog& log) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write log: " + path);
  out << "epoch,lr,train_loss,dev_auc,dev_acer\n";
  out << std::setprecision(17);
  for (const auto& r : log.rows)
    out << r.epoch << "," << r.lr << "," << r.train_loss << "," << r.dev_auc << ","
        << r.dev_acer << "\n";
  if (!out) throw UsageError("write failed: " + path);
}

UnimodalRun train_unimodal(const TrainConfig& cfg, const data::Dataset& ds,
                           const data::ProtocolSplit& split) {
  cfg.validate();
  const auto widths = ds.widths();
  auto it = widths.find(cfg.modality1);
  if (it == widths.end()) throw ProtocolError("dataset lacks modality " + cfg.modality1);

  Rng init_rng(cfg.seed);
  UnimodalRun run{make_unimodal_model(it->second, cfg, init_rng), {}};
  std::vector<nn::Param*> params;
  run.model.collect(params);
  AdamState st;
  st.init(params);

  const auto train_set = data::select(ds, split.train);
  const auto dev_set = data::select(ds, split.dev);
  run.log = run_epochs(
      cfg, train_set,
      [&](const std::vector<const data::Sample*>& batch, double lr) {
        return unimodal_step(run.model, params, st, cfg, batch, lr);
      },
      [&] {
        auto scores = score_samples(dev_set, [&](const data::Sample* s) {
          return eval_sample(run.model, feature_of(s, cfg.modality1)).score;
        });
        return dev_metrics(scores, cfg.dev_bpcer_target);
      });
  return run;
}

MultimodalRun train_multimodal(const TrainConfig& cfg, const data::Dataset& ds,
                               const data::ProtocolSplit& split) {
  cfg.validate();
  if (cfg.modality2.empty()) throw UsageError("config: multimodal training needs modality2");
  const auto widths = ds.widths();
  auto it1 = widths.find(cfg.modality1);
  auto it2 = widths.find(cfg.modality2);
  if (it1 == widths.end() || it2 == widths.end())
    throw ProtocolError("dataset lacks a requested modality");

  Rng init_rng(cfg.seed);
  MultimodalRun run;
  run.mode = cfg.mode;
  const auto train_set = data::select(ds, split.train);
  const auto dev_set = data::select(ds, split.dev);

  if (cfg.mode == Mode::kHyperbolic) {
    run.hyp = mm::make_multimodal_model(it1->second, it2->second, cfg.hidden, cfg.dim,
                                        cfg.curvature(), cfg.alpha, init_rng);
    std::vector<nn::Param*> params;
    run.hyp.collect(params);
    AdamState st;
    st.init(params);
    auto trace = [&](ad::Tape& t, nn::ParamBinding& b, const Vec& x1, const Vec& x2) {
      return mm::multimodal_forward(t, b, run.hyp, x1, x2);
    };
    run.log = run_epochs(
        cfg, train_set,
        [&](const std::vector<const data::Sample*>& batch, double lr) {
          return multimodal_step(run.hyp, trace, params, st, cfg, batch, lr);
        },
        [&] {
          auto scores = score_samples(dev_set, [&](const data::Sample* s) {
            return eval_sample(run.hyp, feature_of(s, cfg.modality1),
                               feature_of(s, cfg.modality2))
                .score;
          });
          return dev_metrics(scores, cfg.dev_bpcer_target);
        });
  } else {
    run.baseline =
        make_multimodal_baseline_model(it1->second, it2->second, cfg, init_rng);
    std::vector<nn::Param*> params;
    run.baseline.collect(params);
    AdamState st;
    st.init(params);
    auto trace = [&](ad::Tape& t, nn::ParamBinding& b, const Vec& x1, const Vec& x2) {
      return baseline_trace(t, b, run.baseline, x1, x2);
    };
    run.log = run_epochs(
        cfg, train_set,
        [&](const std::vector<const data::Sample*>& batch, double lr) {
          return multimodal_step(run.baseline, trace, params, st, cfg, batch, lr);
        },
        [&] {
          auto scores = score_samples(dev_set, [&](const data::Sample* s) {
            return eval_sample(run.baseline, feature_of(s, cfg.modality1),
                               feature_of(s, cfg.modality2))
                .score;
          });
          return dev_metrics(scores, cfg.dev_bpcer_target);
        });
  }
  return run;
}

SampleEval eval_sample(const UnimodalModel& m, const Vec& x) {
  Vec f = m.fc.forward(m.backbone.forward(x));
  if (m.mode == Mode::kHyperbolic) {
    geom::PoincarePoint emb =
        geom::clip_to_ball(geom::exp_map_origin(f, m.curvature).coords, m.alpha, m.curvature);
    return {emb.coords, nn::hyp_blr_probs(m.head.scores(emb)).second};
  }
  geom::PoincarePoint emb = geom::clip_to_ball(f, m.alpha, m.curvature);
  return {emb.coords, nn::hyp_blr_probs(m.lin_head.scores(emb.coords)).second};
}

SampleEval eval_sample(const mm::MultimodalModel& m, const Vec& x1, const Vec& x2) {
  mm::MultimodalOutput out = mm::multimodal_forward(m, x1, x2);
  return {out.emb_fused.coords, out.probs_fused.second};
}

SampleEval eval_sample(const MultimodalBaselineModel& m, const Vec& x1, const Vec& x2) {
  if (x1.empty() || x2.empty()) throw ProtocolError("multimodal forward: a modality is missing");
  Vec f1 = m.fc1.forward(m.backbone1.forward(x1));
  Vec f2 = m.fc2.forward(m.backbone2.forward(x2));
  Vec f_sha = mm::extract_shared(f1, f2, m.s_sha);
  mm::DecomposedFeatures d = mm::decompose(f1, f2, f_sha, m.s_spe1, m.s_spe2);
  Vec sha = geom::clip_to_ball(d.f_sha, m.alpha, m.curvature).coords;
  Vec spe1 = geom::clip_to_ball(d.f_spe1, m.alpha, m.curvature).coords;
  Vec spe2 = geom::clip_to_ball(d.f_spe2, m.alpha, m.curvature).coords;
  Vec fused =
      geom::clip_to_ball(vm::add(sha, vm::add(spe1, spe2)), m.alpha, m.curvature).coords;
  return {fused, nn::hyp_blr_probs(m.head_fus.scores(fused)).second};
}

}  // namespace hypball::train
