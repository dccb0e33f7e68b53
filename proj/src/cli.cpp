#include "hypball/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hypball/checkpoint.hpp"
#include "hypball/data.hpp"
#include "hypball/errors.hpp"
#include "hypball/gradcheck.hpp"
#include "hypball/metrics.hpp"
#include "hypball/multimodal.hpp"
#include "hypball/training.hpp"

namespace hypball::cli {

namespace {

namespace fs = std::filesystem;
using vm::Vec;

const std::map<std::string, train::Mode> kModeMap = {
    {"hyperbolic", train::Mode::kHyperbolic},
    {"euclidean-baseline", train::Mode::kEuclideanBaseline}};

const std::map<std::string, loss::ContrastiveMode> kContrastiveMap = {
    {"bf", loss::ContrastiveMode::kBF},
    {"att", loss::ContrastiveMode::kAtt},
    {"ba", loss::ContrastiveMode::kBA},
    {"none", loss::ContrastiveMode::kNone}};

const std::map<std::string, data::SplitKind> kSplitMap = {
    {"seen", data::SplitKind::kSeen},
    {"leave-one-out", data::SplitKind::kLeaveOneOut},
    {"loo", data::SplitKind::kLeaveOneOut},
    {"cross-set", data::SplitKind::kCrossSet}};

std::string mode_name(train::Mode m) {
  return m == train::Mode::kHyperbolic ? "hyperbolic" : "euclidean-baseline";
}

std::string contrastive_name(loss::ContrastiveMode m) {
  switch (m) {
    case loss::ContrastiveMode::kBF: return "bf";
    case loss::ContrastiveMode::kAtt: return "att";
    case loss::ContrastiveMode::kBA: return "ba";
    case loss::ContrastiveMode::kNone: return "none";
  }
  return "bf";
}

std::string num(double v) {
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

// Seed precedence: a --seed flag anywhere on the command line wins, then the
// HYPBALL_SEED env var, then the config file / default already in *seed.
struct CliContext {
  bool seed_flag_given = false;
  std::optional<std::uint64_t> env_seed;
  int exit_code = 0;

  void apply_seed(std::uint64_t& seed) const {
    if (!seed_flag_given && env_seed) seed = *env_seed;
  }
};

std::optional<std::uint64_t> read_env_seed() {
  const char* raw = std::getenv("HYPBALL_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  std::string s(raw);
  if (s.find_first_not_of("0123456789") != std::string::npos)
    throw UsageError("HYPBALL_SEED must be an unsigned integer, got '" + s + "'");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw UsageError("HYPBALL_SEED out of range: '" + s + "'");
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << text;
  if (!f.good()) throw std::runtime_error("failed writing '" + path + "'");
}

void write_effective_config(const std::string& out_dir, const std::string& subcommand,
                            const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ostringstream o;
  o << "# resolved configuration for `hypball " << subcommand << "`\n"
    << "# reusable via: hypball " << subcommand << " --config <this file>\n"
    << "[" << subcommand << "]\n";
  for (const auto& [k, v] : kv) o << k << "=" << v << "\n";
  write_text_file(out_dir + "/effective-config.txt", o.str());
}

std::vector<int> parse_widths_csv(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw UsageError("empty entry in --modality-widths '" + csv + "'");
    item = item.substr(b, e - b + 1);
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw UsageError("--modality-widths expects comma-separated integers, got '" + csv + "'");
    }
  }
  if (out.empty()) throw UsageError("--modality-widths must name at least one width");
  return out;
}

const Vec& feature_of(const data::Sample& s, const std::string& modality) {
  auto it = s.features.find(modality);
  if (it == s.features.end())
    throw ProtocolError("sample '" + s.id + "' lacks modality '" + modality + "'");
  return it->second;
}

int modality_width(const data::Dataset& ds, const std::string& modality) {
  const auto widths = ds.widths();
  auto it = widths.find(modality);
  if (it == widths.end())
    throw UsageError("dataset has no modality '" + modality + "'; available: " + [&widths] {
      std::string s;
      for (const auto& [k, v] : widths) s += (s.empty() ? "" : ", ") + k;
      return s.empty() ? std::string("none") : s;
    }());
  return it->second;
}

data::SplitKind resolve_split(const std::string& name, const std::string& held_out) {
  auto it = kSplitMap.find(name);
  if (it == kSplitMap.end()) throw UsageError("unknown split '" + name + "'");
  if (it->second != data::SplitKind::kSeen && held_out.empty())
    throw UsageError("--held-out is required for split '" + name + "'");
  return it->second;
}

std::string protocol_label(data::SplitKind kind, const std::string& held_out) {
  std::string label = data::split_kind_name(kind);
  if (!held_out.empty()) label += ":" + held_out;
  return label;
}

// A checkpointed model rebuilt from (architecture flags, dataset widths);
// the pipeline is inferred from the parameter names in the checkpoint.
struct LoadedModel {
  enum class Kind { kUnimodal, kMultimodalHyp, kMultimodalBaseline };
  Kind kind = Kind::kUnimodal;
  train::UnimodalModel uni;
  mm::MultimodalModel hyp_mm;
  train::MultimodalBaselineModel base_mm;
  int dim = 0;

  train::SampleEval eval(const data::Sample& s, const std::string& m1,
                         const std::string& m2) const {
    switch (kind) {
      case Kind::kUnimodal: return train::eval_sample(uni, feature_of(s, m1));
      case Kind::kMultimodalHyp:
        return train::eval_sample(hyp_mm, feature_of(s, m1), feature_of(s, m2));
      case Kind::kMultimodalBaseline:
        return train::eval_sample(base_mm, feature_of(s, m1), feature_of(s, m2));
    }
    throw UsageError("unreachable model kind");
  }
};

LoadedModel load_model(const train::TrainConfig& cfg, const data::Dataset& ds,
                       const std::string& checkpoint_path) {
  const auto cmap = ckpt::read_checkpoint_map(checkpoint_path);
  bool multimodal = false;
  for (const auto& [name, values] : cmap)
    if (name.rfind("s_sha.", 0) == 0) multimodal = true;

  LoadedModel model;
  model.dim = cfg.dim;
  Rng rng(cfg.seed);  // initial values are overwritten by the checkpoint
  std::vector<nn::Param*> params;
  if (!multimodal) {
    model.kind = LoadedModel::Kind::kUnimodal;
    model.uni = train::make_unimodal_model(modality_width(ds, cfg.modality1), cfg, rng);
    model.uni.collect(params);
  } else if (cfg.mode == train::Mode::kHyperbolic) {
    model.kind = LoadedModel::Kind::kMultimodalHyp;
    model.hyp_mm = mm::make_multimodal_model(modality_width(ds, cfg.modality1),
                                             modality_width(ds, cfg.modality2), cfg.hidden,
                                             cfg.dim, cfg.curvature(), cfg.alpha, rng);
    model.hyp_mm.collect(params);
  } else {
    model.kind = LoadedModel::Kind::kMultimodalBaseline;
    model.base_mm = train::make_multimodal_baseline_model(
        modality_width(ds, cfg.modality1), modality_width(ds, cfg.modality2), cfg, rng);
    model.base_mm.collect(params);
  }
  ckpt::load_checkpoint(checkpoint_path, params);
  return model;
}

// ---- subcommand states -----------------------------------------------------

struct GenDataState {
  data::HierarchySpec spec;
  std::string widths_csv = "16";
  std::string out_dir;
};

struct TrainState {
  train::TrainConfig cfg;
  std::string data_path;
  std::string out_dir;
  std::string split_name = "seen";
  std::string held_out;
};

struct EvalState {
  train::TrainConfig cfg;
  std::string data_path;
  std::string checkpoint_path;
  std::string out_dir;
  std::string split_name = "seen";
  std::string held_out;
};

struct ExportState {
  train::TrainConfig cfg;
  std::string data_path;
  std::string checkpoint_path;
  std::string out_dir;
};

struct GradcheckState {
  std::uint64_t seed = 7;
  int points = 20;
};

// Option values live on the subcommands, so the config file addresses them
// through a [subcommand] section (exactly what the effective-config echo
// emits). Options given on the command line always win over file values.
void enable_config(CLI::App* sub) { sub->fallthrough(); }

void add_arch_options(CLI::App* sub, train::TrainConfig* cfg) {
  sub->add_option("--c", cfg->c, "ball curvature magnitude")->capture_default_str();
  sub->add_option("--alpha", cfg->alpha, "clip margin: norms capped at (1/sqrt(c))*(1-alpha)")
      ->capture_default_str();
  sub->add_option("--dim", cfg->dim, "embedding width")->capture_default_str();
  sub->add_option("--hidden", cfg->hidden, "backbone hidden width")->capture_default_str();
  sub->add_option("--max-norm-eps", cfg->max_norm_eps,
                  "relative margin that keeps gyro-sums strictly inside the ball")
      ->capture_default_str();
  sub->add_option("--mode", cfg->mode,
                  "geometry: hyperbolic | euclidean-baseline (default: hyperbolic)")
      ->transform(CLI::CheckedTransformer(kModeMap, CLI::ignore_case));
  sub->add_option("--modality1", cfg->modality1, "name of the first (or only) modality")
      ->capture_default_str();
  sub->add_option("--modality2", cfg->modality2, "name of the second modality")
      ->capture_default_str();
  sub->add_option("--seed", cfg->seed, "RNG seed (HYPBALL_SEED env var overrides config files)")
      ->capture_default_str();
}

void add_optim_options(CLI::App* sub, train::TrainConfig* cfg) {
  sub->add_option("--batch-size", cfg->batch_size, "samples per batch")->capture_default_str();
  sub->add_option("--epochs", cfg->epochs, "training epochs")->capture_default_str();
  sub->add_option("--lr", cfg->lr, "initial learning rate")->capture_default_str();
  sub->add_option("--lr-decay", cfg->lr_decay, "learning-rate multiplier per decay step")
      ->capture_default_str();
  sub->add_option("--lr-decay-every", cfg->lr_decay_every, "epochs between decay steps")
      ->capture_default_str();
  sub->add_option("--weight-decay", cfg->weight_decay, "coupled L2 weight decay")
      ->capture_default_str();
  sub->add_option("--lambda1", cfg->weights.lambda1, "classification loss weight")
      ->capture_default_str();
  sub->add_option("--lambda2", cfg->weights.lambda2, "contrastive loss weight")
      ->capture_default_str();
  sub->add_option("--tau", cfg->weights.tau, "contrastive temperature")->capture_default_str();
  sub->add_option("--contrastive", cfg->contrastive,
                  "contrastive flavour: bf | att | ba | none (default: bf)")
      ->transform(CLI::CheckedTransformer(kContrastiveMap, CLI::ignore_case));
  sub->add_option("--dev-bpcer-target", cfg->dev_bpcer_target,
                  "dev-set bonafide error rate that fixes the decision threshold")
      ->capture_default_str();
}

void add_split_options(CLI::App* sub, std::string* split_name, std::string* held_out) {
  sub->add_option("--split", *split_name, "protocol: seen | loo | cross-set")
      ->capture_default_str();
  sub->add_option("--held-out", *held_out,
                  "attack type (loo) or attack-name prefix (cross-set) to hold out");
}

std::vector<std::pair<std::string, std::string>> arch_kv(const train::TrainConfig& cfg) {
  return {{"c", num(cfg.c)},
          {"alpha", num(cfg.alpha)},
          {"dim", std::to_string(cfg.dim)},
          {"hidden", std::to_string(cfg.hidden)},
          {"max-norm-eps", num(cfg.max_norm_eps)},
          {"mode", mode_name(cfg.mode)},
          {"modality1", cfg.modality1},
          {"modality2", cfg.modality2},
          {"seed", std::to_string(cfg.seed)}};
}

std::vector<std::pair<std::string, std::string>> optim_kv(const train::TrainConfig& cfg,
                                                          bool gammas) {
  std::vector<std::pair<std::string, std::string>> kv = {
      {"batch-size", std::to_string(cfg.batch_size)},
      {"epochs", std::to_string(cfg.epochs)},
      {"lr", num(cfg.lr)},
      {"lr-decay", num(cfg.lr_decay)},
      {"lr-decay-every", std::to_string(cfg.lr_decay_every)},
      {"weight-decay", num(cfg.weight_decay)},
      {"lambda1", num(cfg.weights.lambda1)},
      {"lambda2", num(cfg.weights.lambda2)},
      {"tau", num(cfg.weights.tau)},
      {"contrastive", contrastive_name(cfg.contrastive)},
      {"dev-bpcer-target", num(cfg.dev_bpcer_target)}};
  if (gammas) {
    kv.push_back({"gamma1", num(cfg.weights.gamma1)});
    kv.push_back({"gamma2", num(cfg.weights.gamma2)});
    kv.push_back({"gamma3", num(cfg.weights.gamma3)});
    kv.push_back({"gamma4", num(cfg.weights.gamma4)});
  }
  return kv;
}

void append_kv(std::vector<std::pair<std::string, std::string>>& kv,
               std::vector<std::pair<std::string, std::string>> more) {
  for (auto& p : more) kv.push_back(std::move(p));
}

// ---- subcommand bodies -----------------------------------------------------

void run_gen_data(const CliContext& ctx, GenDataState& st) {
  data::HierarchySpec spec = st.spec;
  spec.modality_widths = parse_widths_csv(st.widths_csv);
  if (spec.modality_widths.size() == 1 && spec.modalities > 1)
    spec.modality_widths.assign(static_cast<std::size_t>(spec.modalities),
                                spec.modality_widths[0]);
  ctx.apply_seed(spec.seed);

  const data::Dataset ds = data::generate_synthetic(spec);
  fs::create_directories(st.out_dir);
  data::save_jsonl(ds, st.out_dir + "/dataset.jsonl");

  std::string widths;
  for (std::size_t i = 0; i < spec.modality_widths.size(); ++i)
    widths += (i ? "," : "") + std::to_string(spec.modality_widths[i]);
  write_effective_config(
      st.out_dir, "gen-data",
      {{"depth", std::to_string(spec.depth)},
       {"branching", std::to_string(spec.branching)},
       {"samples-per-leaf", std::to_string(spec.samples_per_leaf)},
       {"bonafide-count", std::to_string(spec.bonafide_count)},
       {"latent-dim", std::to_string(spec.latent_dim)},
       {"root-scale", num(spec.root_scale)},
       {"scale-decay", num(spec.scale_decay)},
       {"leaf-noise", num(spec.leaf_noise)},
       {"bonafide-separation", num(spec.bonafide_separation)},
       {"bonafide-noise", num(spec.bonafide_noise)},
       {"modalities", std::to_string(spec.modalities)},
       {"modality-widths", widths},
       {"view-noise", num(spec.view_noise)},
       {"seed", std::to_string(spec.seed)},
       {"out-dir", st.out_dir}});

  std::cout << "wrote " << ds.size() << " samples (" << spec.leaf_count()
            << " attack leaves) to " << st.out_dir << "/dataset.jsonl\n";
}

void finish_training_outputs(const std::string& out_dir, const train::TrainLog& log,
                             std::vector<nn::Param*>& params) {
  fs::create_directories(out_dir);
  ckpt::save_checkpoint(out_dir + "/checkpoint.json", params);
  train::write_log_csv(out_dir + "/train-log.csv", log);
  if (!log.rows.empty()) {
    const auto& last = log.rows.back();
    std::cout << "epoch " << last.epoch << ": train_loss=" << num(last.train_loss)
              << " dev_auc=" << num(last.dev_auc) << " dev_acer=" << num(last.dev_acer) << "\n";
  }
  std::cout << "checkpoint: " << out_dir << "/checkpoint.json\n";
}

void run_train(const CliContext& ctx, TrainState& st, bool multimodal) {
  ctx.apply_seed(st.cfg.seed);
  const data::SplitKind kind = resolve_split(st.split_name, st.held_out);
  const data::Dataset ds = data::load_jsonl(st.data_path);
  const data::ProtocolSplit sp = data::split(ds, kind, st.held_out, st.cfg.seed);

  std::vector<nn::Param*> params;
  train::TrainLog log;
  // Keep the trained model alive until the checkpoint is written.
  train::UnimodalRun uni;
  train::MultimodalRun mmr;
  if (multimodal) {
    mmr = train::train_multimodal(st.cfg, ds, sp);
    if (mmr.mode == train::Mode::kHyperbolic)
      mmr.hyp.collect(params);
    else
      mmr.baseline.collect(params);
    log = mmr.log;
  } else {
    uni = train::train_unimodal(st.cfg, ds, sp);
    uni.model.collect(params);
    log = uni.log;
  }
  finish_training_outputs(st.out_dir, log, params);

  std::vector<std::pair<std::string, std::string>> kv = {{"data", st.data_path},
                                                         {"out-dir", st.out_dir},
                                                         {"split", st.split_name},
                                                         {"held-out", st.held_out}};
  append_kv(kv, arch_kv(st.cfg));
  append_kv(kv, optim_kv(st.cfg, multimodal));
  write_effective_config(st.out_dir, multimodal ? "train-mm" : "train", kv);
}

void run_eval(const CliContext& ctx, EvalState& st) {
  ctx.apply_seed(st.cfg.seed);
  const data::SplitKind kind = resolve_split(st.split_name, st.held_out);
  const data::Dataset ds = data::load_jsonl(st.data_path);
  const data::ProtocolSplit sp = data::split(ds, kind, st.held_out, st.cfg.seed);
  const LoadedModel model = load_model(st.cfg, ds, st.checkpoint_path);

  Vec dev_bona;
  for (const data::Sample* s : data::select(ds, sp.dev))
    if (s->bonafide()) dev_bona.push_back(model.eval(*s, st.cfg.modality1, st.cfg.modality2).score);
  const double threshold = metrics::threshold_at_bpcer(dev_bona, st.cfg.dev_bpcer_target);

  metrics::ScoreSet test;
  for (const data::Sample* s : data::select(ds, sp.test)) {
    const double score = model.eval(*s, st.cfg.modality1, st.cfg.modality2).score;
    (s->bonafide() ? test.bonafide : test.attacks).push_back(score);
  }
  const metrics::MetricsReport report =
      metrics::evaluate_scores(test, threshold, protocol_label(kind, st.held_out));

  fs::create_directories(st.out_dir);
  write_text_file(st.out_dir + "/report.json", metrics::report_json(report) + "\n");
  std::cout << metrics::report_table(report);

  std::vector<std::pair<std::string, std::string>> kv = {{"data", st.data_path},
                                                         {"checkpoint", st.checkpoint_path},
                                                         {"out-dir", st.out_dir},
                                                         {"split", st.split_name},
                                                         {"held-out", st.held_out}};
  append_kv(kv, arch_kv(st.cfg));
  kv.push_back({"dev-bpcer-target", num(st.cfg.dev_bpcer_target)});
  write_effective_config(st.out_dir, "eval", kv);
}

void run_export(const CliContext& ctx, ExportState& st) {
  ctx.apply_seed(st.cfg.seed);
  const data::Dataset ds = data::load_jsonl(st.data_path);
  const LoadedModel model = load_model(st.cfg, ds, st.checkpoint_path);

  fs::create_directories(st.out_dir);
  const std::string path = st.out_dir + "/embeddings.csv";
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << "id,label,attack_type";
  for (int i = 0; i < model.dim; ++i) f << ",c" << i;
  f << ",norm\n";
  f << std::setprecision(17);
  for (const auto& s : ds.samples) {
    const train::SampleEval ev = model.eval(s, st.cfg.modality1, st.cfg.modality2);
    f << s.id << ',' << s.label << ',' << s.attack_type;
    for (double v : ev.embedding) f << ',' << v;
    f << ',' << vm::norm(ev.embedding) << '\n';
  }
  if (!f.good()) throw std::runtime_error("failed writing '" + path + "'");
  std::cout << "wrote " << ds.size() << " embeddings to " << path << "\n";

  std::vector<std::pair<std::string, std::string>> kv = {
      {"data", st.data_path}, {"checkpoint", st.checkpoint_path}, {"out-dir", st.out_dir}};
  append_kv(kv, arch_kv(st.cfg));
  write_effective_config(st.out_dir, "export-embeddings", kv);
}

void run_gradcheck(CliContext& ctx, GradcheckState& st) {
  ctx.apply_seed(st.seed);
  const auto reports = gc::run_gradcheck_suite(st.seed, st.points);
  std::cout << std::left;
  for (const auto& r : reports)
    std::cout << "  " << std::setw(24) << r.name << std::scientific << std::setprecision(3)
              << r.worst_rel << std::defaultfloat << "  (" << r.points << " points)\n";
  const double worst = gc::worst_relative_error(reports);
  std::cout << "max relative error: " << std::scientific << std::setprecision(3) << worst
            << std::defaultfloat << "\n";
  if (worst > 1e-4) {
    std::cerr << "FAIL: analytic gradients deviate from central differences beyond 1e-4\n";
    ctx.exit_code = 2;
  } else {
    std::cout << "PASS: all gradients match central differences within 1e-4\n";
  }
}

}  // namespace

int run(int argc, const char* const* argv) {
  CliContext ctx;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--seed" || a.rfind("--seed=", 0) == 0) ctx.seed_flag_given = true;
  }

  CLI::App app{"Poincare-ball toolkit for face anti-spoofing experiments", "hypball"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "key=value config file with a [subcommand] section; command-line flags override "
                 "file values");
  app.allow_config_extras(CLI::config_extras_mode::error);

  GenDataState gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic attack-taxonomy dataset");
  enable_config(gen_cmd);
  gen_cmd->add_option("--depth", gen.spec.depth, "levels below the attack root")
      ->capture_default_str();
  gen_cmd->add_option("--branching", gen.spec.branching, "children per internal node")
      ->capture_default_str();
  gen_cmd->add_option("--samples-per-leaf", gen.spec.samples_per_leaf, "samples per attack leaf")
      ->capture_default_str();
  gen_cmd->add_option("--bonafide-count", gen.spec.bonafide_count, "bonafide samples")
      ->capture_default_str();
  gen_cmd->add_option("--latent-dim", gen.spec.latent_dim, "latent cluster dimension")
      ->capture_default_str();
  gen_cmd->add_option("--root-scale", gen.spec.root_scale, "sibling mean spread at level 1")
      ->capture_default_str();
  gen_cmd->add_option("--scale-decay", gen.spec.scale_decay, "spread multiplier per level")
      ->capture_default_str();
  gen_cmd->add_option("--leaf-noise", gen.spec.leaf_noise, "within-leaf latent noise")
      ->capture_default_str();
  gen_cmd
      ->add_option("--bonafide-separation", gen.spec.bonafide_separation,
                   "distance between bonafide mean and attack root")
      ->capture_default_str();
  gen_cmd->add_option("--bonafide-noise", gen.spec.bonafide_noise, "bonafide latent noise")
      ->capture_default_str();
  gen_cmd->add_option("--modalities", gen.spec.modalities, "modalities to emit (named m1, m2, ...)")
      ->capture_default_str();
  gen_cmd
      ->add_option("--modality-widths", gen.widths_csv,
                   "comma-separated per-modality feature widths; one value is replicated")
      ->capture_default_str();
  gen_cmd->add_option("--view-noise", gen.spec.view_noise, "observation noise per modality")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.spec.seed, "RNG seed (HYPBALL_SEED env var overrides config files)")
      ->capture_default_str();
  gen_cmd->add_option("--out-dir", gen.out_dir, "output directory")->required();
  gen_cmd->callback([&ctx, &gen] { run_gen_data(ctx, gen); });

  TrainState tr;
  auto* train_cmd = app.add_subcommand("train", "train the single-modality pipeline");
  enable_config(train_cmd);
  train_cmd->add_option("--data", tr.data_path, "input JSONL dataset")->required();
  train_cmd->add_option("--out-dir", tr.out_dir, "output directory")->required();
  add_split_options(train_cmd, &tr.split_name, &tr.held_out);
  add_arch_options(train_cmd, &tr.cfg);
  add_optim_options(train_cmd, &tr.cfg);
  train_cmd->callback([&ctx, &tr] { run_train(ctx, tr, /*multimodal=*/false); });

  TrainState trm;
  trm.cfg.batch_size = 32;  // the usual two-modality setting
  auto* trainmm_cmd = app.add_subcommand("train-mm", "train the two-modality pipeline");
  enable_config(trainmm_cmd);
  trainmm_cmd->add_option("--data", trm.data_path, "input JSONL dataset")->required();
  trainmm_cmd->add_option("--out-dir", trm.out_dir, "output directory")->required();
  add_split_options(trainmm_cmd, &trm.split_name, &trm.held_out);
  add_arch_options(trainmm_cmd, &trm.cfg);
  add_optim_options(trainmm_cmd, &trm.cfg);
  trainmm_cmd->add_option("--gamma1", trm.cfg.weights.gamma1, "shared-distance loss weight")
      ->capture_default_str();
  trainmm_cmd->add_option("--gamma2", trm.cfg.weights.gamma2, "decomposition BCE weight")
      ->capture_default_str();
  trainmm_cmd->add_option("--gamma3", trm.cfg.weights.gamma3, "decomposition contrastive weight")
      ->capture_default_str();
  trainmm_cmd->add_option("--gamma4", trm.cfg.weights.gamma4, "fused contrastive weight")
      ->capture_default_str();
  trainmm_cmd->callback([&ctx, &trm] { run_train(ctx, trm, /*multimodal=*/true); });

  EvalState ev;
  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a protocol split");
  enable_config(eval_cmd);
  eval_cmd->add_option("--data", ev.data_path, "input JSONL dataset")->required();
  eval_cmd->add_option("--checkpoint", ev.checkpoint_path, "checkpoint JSON from train/train-mm")
      ->required();
  eval_cmd->add_option("--out-dir", ev.out_dir, "output directory")->required();
  add_split_options(eval_cmd, &ev.split_name, &ev.held_out);
  add_arch_options(eval_cmd, &ev.cfg);
  eval_cmd
      ->add_option("--dev-bpcer-target", ev.cfg.dev_bpcer_target,
                   "dev-set bonafide error rate that fixes the decision threshold")
      ->capture_default_str();
  eval_cmd->callback([&ctx, &ev] { run_eval(ctx, ev); });

  ExportState ex;
  auto* export_cmd =
      app.add_subcommand("export-embeddings", "dump per-sample embeddings and ball norms as CSV");
  enable_config(export_cmd);
  export_cmd->add_option("--data", ex.data_path, "input JSONL dataset")->required();
  export_cmd->add_option("--checkpoint", ex.checkpoint_path, "checkpoint JSON from train/train-mm")
      ->required();
  export_cmd->add_option("--out-dir", ex.out_dir, "output directory")->required();
  add_arch_options(export_cmd, &ex.cfg);
  export_cmd->callback([&ctx, &ex] { run_export(ctx, ex); });

  GradcheckState gr;
  auto* grad_cmd =
      app.add_subcommand("gradcheck", "verify analytic gradients against central differences");
  enable_config(grad_cmd);
  grad_cmd->add_option("--seed", gr.seed, "RNG seed (HYPBALL_SEED env var overrides config files)")
      ->capture_default_str();
  grad_cmd->add_option("--points", gr.points, "random in-domain points per operation")
      ->capture_default_str();
  grad_cmd->callback([&ctx, &gr] { run_gradcheck(ctx, gr); });

  try {
    ctx.env_seed = read_env_seed();
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return ctx.exit_code;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("hypball");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& s : full) argv.push_back(s.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace hypball::cli
