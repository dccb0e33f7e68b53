#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hypball/rng.hpp"
#include "hypball/vecmath.hpp"

namespace hypball::data {

using vm::Vec;

// One labelled record. label 1 = bonafide (attack_type empty), label 0 =
// attack (attack_type names the taxonomy leaf, e.g. "atk-0-1"). features maps
// modality name -> feature array; widths are consistent per modality across a
// dataset.
struct Sample {
  std::string id;
  int label = 0;
  std::string attack_type;  // empty iff bonafide
  std::map<std::string, Vec> features;

  bool bonafide() const { return label == 1; }
};

struct Dataset {
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  // Modality name -> feature width; empty dataset yields an empty map.
  std::map<std::string, int> widths() const;
  // Sorted unique attack type names.
  std::vector<std::string> attack_types() const;
};

// Recipe for the synthetic taxonomy: a balanced tree of attack clusters under
// one root, plus a separated bonafide cluster, observed through per-modality
// noisy linear views of the latent coordinates.
struct HierarchySpec {
  int depth = 2;       // levels below the attack root; leaves = branching^depth
  int branching = 2;   // children per internal node
  int samples_per_leaf = 200;
  int bonafide_count = 800;
  int latent_dim = 16;
  double root_scale = 4.0;          // sibling mean spread at the first level
  double scale_decay = 0.5;         // spread multiplier per extra level
  double leaf_noise = 0.5;          // within-leaf latent noise
  double bonafide_separation = 6.0; // |bonafide mean - attack root|
  double bonafide_noise = 0.5;
  int modalities = 1;               // named m1, m2, ...
  std::vector<int> modality_widths = {16};
  double view_noise = 0.1;          // observation noise per modality
  std::uint64_t seed = 7;

  int leaf_count() const;
  // Throws UsageError on nonpositive counts/widths, negative noise, or a
  // modality count that disagrees with modality_widths.
  void validate() const;
};

// Deterministic in HierarchySpec::seed. Attack leaves are named by their path
// from the root ("atk-<child>-<child>-..."); sample ids are
// "<cluster>-<counter>".
Dataset generate_synthetic(const HierarchySpec& spec);

// JSON Lines: one object per line with keys id, label, attack_type (null for
// bonafide), features. Loading validates the label/attack_type pairing,
// finiteness, and per-modality width consistency.
Dataset load_jsonl(const std::string& path);
void save_jsonl(const Dataset& ds, const std::string& path);

enum class SplitKind { kSeen, kLeaveOneOut, kCrossSet };

struct ProtocolSplit {
  SplitKind kind = SplitKind::kSeen;
  std::vector<std::string> train, dev, test;
};

// seen: 60/20/20 stratified by (label, attack_type).
// leave-one-attack-out: every sample of held_out_attack goes to test;
//   bonafide 60/20/20; remaining attack types 75/25 train/dev so dev keeps
//   seen attacks for thresholding.
// cross-set: held_out_attack is a name prefix; every attack type matching it
//   is held out wholesale (test), the rest as in leave-one-attack-out.
ProtocolSplit split(const Dataset& ds, SplitKind kind, const std::string& held_out_attack,
                    std::uint64_t seed);

// Resolves id lists against the dataset; unknown id -> UsageError.
std::vector<const Sample*> select(const Dataset& ds, const std::vector<std::string>& ids);

const char* split_kind_name(SplitKind kind);

}  // namespace hypball::data
