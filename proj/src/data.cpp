#include "hypball/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hypball/errors.hpp"

namespace hypball::data {

using nlohmann::json;

namespace {

std::string padded(int n) {
  std::ostringstream out;
  out << n;
  std::string digits = out.str();
  return std::string(digits.size() >= 4 ? 0 : 4 - digits.size(), '0') + digits;
}

Vec view_of(const Vec& w, const Vec& z, int rows) {
  const int cols = static_cast<int>(z.size());
  Vec out(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) {
    double s = 0.0;
    const double* row = w.data() + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) s += row[j] * z[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

// Fractions of a stratum of size n assigned to train/dev; the remainder is
// test. Integer arithmetic keeps the partition exact and deterministic.
std::pair<std::size_t, std::size_t> take_60_20(std::size_t n) {
  return {(n * 6) / 10, (n * 2) / 10};
}

std::size_t take_75(std::size_t n) { return (n * 3) / 4; }

}  // namespace

std::map<std::string, int> Dataset::widths() const {
  std::map<std::string, int> out;
  for (const auto& s : samples)
    for (const auto& [name, feat] : s.features) {
      auto [it, inserted] = out.emplace(name, static_cast<int>(feat.size()));
      if (!inserted && it->second != static_cast<int>(feat.size()))
        throw SchemaError("inconsistent width for modality " + name);
    }
  return out;
}

std::vector<std::string> Dataset::attack_types() const {
  std::set<std::string> types;
  for (const auto& s : samples)
    if (!s.bonafide()) types.insert(s.attack_type);
  return {types.begin(), types.end()};
}

int HierarchySpec::leaf_count() const {
  int n = 1;
  for (int i = 0; i < depth; ++i) n *= branching;
  return n;
}

void HierarchySpec::validate() const {
  if (depth < 1 || branching < 1) throw UsageError("hierarchy: depth and branching must be >= 1");
  if (samples_per_leaf < 1 || bonafide_count < 1)
    throw UsageError("hierarchy: sample counts must be positive");
  if (latent_dim < 1) throw UsageError("hierarchy: latent_dim must be positive");
  if (modalities < 1 || modalities != static_cast<int>(modality_widths.size()))
    throw UsageError("hierarchy: modality count must match modality_widths");
  for (int w : modality_widths)
    if (w < 1) throw UsageError("hierarchy: modality widths must be positive");
  for (double v : {root_scale, scale_decay, leaf_noise, bonafide_separation, bonafide_noise,
                   view_noise})
    if (!(v >= 0.0) || !std::isfinite(v)) throw UsageError("hierarchy: scales must be finite and >= 0");
}

Dataset generate_synthetic(const HierarchySpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t latent = static_cast<std::size_t>(spec.latent_dim);

  // Bonafide cluster sits at a fixed distance from the attack root (origin)
  // along a seeded random direction.
  Vec dir = rng.normal_vec(latent);
  double dn = vm::norm(dir);
  if (dn < 1e-12) {
    dir.assign(latent, 0.0);
    dir[0] = 1.0;
    dn = 1.0;
  }
  const Vec bona_mean = vm::scaled(dir, spec.bonafide_separation / dn);

  // Leaf means by depth-first recursion: each child perturbs its parent by a
  // spread that decays per level, which plants the taxonomy in the latents.
  std::vector<std::pair<std::string, Vec>> leaves;
  auto descend = [&](auto&& self, const Vec& mean, int level, const std::string& path) -> void {
    if (level == spec.depth) {
      leaves.emplace_back("atk" + path, mean);
      return;
    }
    const double spread = spec.root_scale * std::pow(spec.scale_decay, level);
    for (int child = 0; child < spec.branching; ++child) {
      Vec child_mean = vm::add(mean, vm::scaled(rng.normal_vec(latent), spread));
      self(self, child_mean, level + 1, path + "-" + std::to_string(child));
    }
  };
  descend(descend, Vec(latent, 0.0), 0, "");

  // Per-modality mixing matrices (width x latent, row-major).
  std::vector<Vec> mixing;
  for (int m = 0; m < spec.modalities; ++m)
    mixing.push_back(rng.normal_vec(static_cast<std::size_t>(spec.modality_widths[m]) * latent,
                                    0.0, 1.0 / std::sqrt(static_cast<double>(latent))));

  Dataset ds;
  auto emit_cluster = [&](const std::string& cluster, const Vec& mean, double noise, int label,
                          const std::string& attack_type, int count) {
    for (int i = 0; i < count; ++i) {
      Vec z = vm::add(mean, vm::scaled(rng.normal_vec(latent), noise));
      Sample s;
      s.id = cluster + "-" + padded(i);
      s.label = label;
      s.attack_type = attack_type;
      for (int m = 0; m < spec.modalities; ++m) {
        Vec feat = view_of(mixing[static_cast<std::size_t>(m)], z, spec.modality_widths[m]);
        feat = vm::add(feat, vm::scaled(rng.normal_vec(feat.size()), spec.view_noise));
        s.features.emplace("m" + std::to_string(m + 1), std::move(feat));
      }
      ds.samples.push_back(std::move(s));
    }
  };

  emit_cluster("bona", bona_mean, spec.bonafide_noise, 1, "", spec.bonafide_count);
  for (const auto& [name, mean] : leaves)
    emit_cluster(name, mean, spec.leaf_noise, 0, name, spec.samples_per_leaf);
  return ds;
}

Dataset load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open dataset file: " + path);
  Dataset ds;
  std::map<std::string, int> widths;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), lineno);
    }
    const std::string where = " (line " + std::to_string(lineno) + ")";
    if (!j.is_object() || !j.contains("id") || !j.contains("label") || !j.contains("features"))
      throw SchemaError("record needs id, label, features" + where);
    if (!j["id"].is_string() || !j["label"].is_number_integer() || !j["features"].is_object())
      throw SchemaError("record field types are wrong" + where);
    Sample s;
    s.id = j["id"].get<std::string>();
    s.label = j["label"].get<int>();
    if (s.label != 0 && s.label != 1) throw SchemaError("label must be 0 or 1" + where);
    const bool has_type = j.contains("attack_type") && !j["attack_type"].is_null();
    if (has_type && !j["attack_type"].is_string())
      throw SchemaError("attack_type must be a string or null" + where);
    if (has_type) s.attack_type = j["attack_type"].get<std::string>();
    if (s.label == 1 && has_type)
      throw SchemaError("bonafide record must not carry an attack_type" + where);
    if (s.label == 0 && (!has_type || s.attack_type.empty()))
      throw SchemaError("attack record needs a non-empty attack_type" + where);
    for (const auto& [name, arr] : j["features"].items()) {
      if (!arr.is_array()) throw SchemaError("feature " + name + " must be an array" + where);
      Vec feat;
      feat.reserve(arr.size());
      for (const auto& v : arr) {
        if (!v.is_number()) throw SchemaError("feature " + name + " has a non-number" + where);
        feat.push_back(v.get<double>());
      }
      if (!vm::all_finite(feat))
        throw SchemaError("feature " + name + " has a non-finite entry" + where);
      auto [it, inserted] = widths.emplace(name, static_cast<int>(feat.size()));
      if (!inserted && it->second != static_cast<int>(feat.size()))
        throw SchemaError("modality " + name + " width changed" + where);
      s.features.emplace(name, std::move(feat));
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void save_jsonl(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write dataset file: " + path);
  for (const auto& s : ds.samples) {
    json j;
    j["id"] = s.id;
    j["label"] = s.label;
    j["attack_type"] = s.bonafide() ? json(nullptr) : json(s.attack_type);
    json feats = json::object();
    for (const auto& [name, feat] : s.features) feats[name] = feat;
    j["features"] = std::move(feats);
    out << j.dump() << "\n";
  }
  if (!out) throw UsageError("write failed: " + path);
}

ProtocolSplit split(const Dataset& ds, SplitKind kind, const std::string& held_out_attack,
                    std::uint64_t seed) {
  // Strata in sorted key order, bonafide under "": deterministic iteration
  // fixes the shuffle sequence.
  std::map<std::string, std::vector<std::string>> strata;
  for (const auto& s : ds.samples) strata[s.attack_type].push_back(s.id);

  const auto types = ds.attack_types();
  auto held = [&](const std::string& type) {
    if (type.empty()) return false;  // bonafide stratum
    if (kind == SplitKind::kLeaveOneOut) return type == held_out_attack;
    if (kind == SplitKind::kCrossSet)
      return type.compare(0, held_out_attack.size(), held_out_attack) == 0;
    return false;
  };
  if (kind == SplitKind::kSeen) {
    if (!held_out_attack.empty())
      throw UsageError("split: held-out attack is only meaningful for leave-one-out/cross-set");
  } else {
    if (held_out_attack.empty()) throw UsageError("split: held-out attack required");
    if (std::none_of(types.begin(), types.end(), held))
      throw UsageError("split: no attack type matches " + held_out_attack);
  }

  Rng rng(seed);
  ProtocolSplit out;
  out.kind = kind;
  for (auto& [type, ids] : strata) {
    rng.shuffle(ids);
    if (held(type)) {
      out.test.insert(out.test.end(), ids.begin(), ids.end());
      continue;
    }
    if (kind == SplitKind::kSeen || type.empty()) {
      const auto [n_train, n_dev] = take_60_20(ids.size());
      out.train.insert(out.train.end(), ids.begin(), ids.begin() + n_train);
      out.dev.insert(out.dev.end(), ids.begin() + n_train, ids.begin() + n_train + n_dev);
      out.test.insert(out.test.end(), ids.begin() + n_train + n_dev, ids.end());
    } else {
      // Seen attacks under a held-out protocol never reach test.
      const std::size_t n_train = take_75(ids.size());
      out.train.insert(out.train.end(), ids.begin(), ids.begin() + n_train);
      out.dev.insert(out.dev.end(), ids.begin() + n_train, ids.end());
    }
  }
  return out;
}

std::vector<const Sample*> select(const Dataset& ds, const std::vector<std::string>& ids) {
  std::map<std::string, const Sample*> index;
  for (const auto& s : ds.samples) index.emplace(s.id, &s);
  std::vector<const Sample*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw UsageError("unknown sample id: " + id);
    out.push_back(it->second);
  }
  return out;
}

const char* split_kind_name(SplitKind kind) {
  switch (kind) {
    case SplitKind::kSeen: return "seen";
    case SplitKind::kLeaveOneOut: return "leave-one-attack-out";
    case SplitKind::kCrossSet: return "cross-set";
  }
  return "unknown";
}

}  // namespace hypball::data
