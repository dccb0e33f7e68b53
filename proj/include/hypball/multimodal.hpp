#pragma once

#include <utility>
#include <vector>

#include "hypball/geometry.hpp"
#include "hypball/geometry_ad.hpp"
#include "hypball/layers.hpp"

namespace hypball::mm {

using vm::Vec;

// Per-sample output of the Euclidean decomposition: the modal-share feature
// and the two modal-specific residual refinements, all of width dim.
struct DecomposedFeatures {
  Vec f_sha;
  Vec f_spe1;
  Vec f_spe2;
};

// The hyperbolic fusion of the decomposed features; always inside the clip
// bound.
struct FusedEmbedding {
  geom::PoincarePoint point;
};

// Two-modality pipeline: per-modality feature extraction, shared/specific
// decomposition in Euclidean space, fusion and classification on the ball.
// Four classifier heads supervise the shared, the two specific, and the fused
// embeddings; the fused head is the deployment score.
struct MultimodalModel {
  geom::Curvature curvature;
  double alpha = 0.1;
  int dim = 0;

  nn::Mlp backbone1, backbone2;        // raw modality input -> hidden
  nn::AffineLayer fc1, fc2;            // hidden -> dim, linear
  nn::Mlp s_sha;                       // 2*dim -> dim refinement
  nn::Mlp s_spe1, s_spe2;              // dim -> dim refinements
  nn::HypBLRHead head_sha, head_spe1, head_spe2, head_fus;

  void collect(std::vector<nn::Param*>& params);
  int input_width(int modality) const;  // modality in {1, 2}
};

MultimodalModel make_multimodal_model(int in1, int in2, int hidden, int dim,
                                      const geom::Curvature& k, double alpha, Rng& rng);

// F_sha = S_sha(concat(f1, f2)); f1 and f2 have width dim, S_sha takes 2*dim.
Vec extract_shared(const Vec& f1, const Vec& f2, const nn::Mlp& s_sha);
ad::Var extract_shared(ad::Tape& t, nn::ParamBinding& b, ad::Var f1, ad::Var f2,
                       const nn::Mlp& s_sha);

// f_spe1 = S_spe1(f1 - f_sha), f_spe2 = S_spe2(f2 - f_sha).
DecomposedFeatures decompose(const Vec& f1, const Vec& f2, const Vec& f_sha,
                             const nn::Mlp& s_spe1, const nn::Mlp& s_spe2);

// Clip(sha (+) (spe1 (+) spe2)): Moebius addition is non-associative, so the
// grouping (specific pair first, shared feature on the left) is part of the
// contract. The sum is re-capped at alpha so the fused point obeys the same
// bound as its inputs.
FusedEmbedding fuse_points(const geom::PoincarePoint& sha, const geom::PoincarePoint& spe1,
                           const geom::PoincarePoint& spe2, double alpha);

// exp_0 then clip each component, then fuse_points.
FusedEmbedding hyperbolic_fuse(const DecomposedFeatures& d, const geom::Curvature& k,
                               double alpha);
ad::Var hyperbolic_fuse(ad::Tape& t, ad::Var f_sha, ad::Var f_spe1, ad::Var f_spe2,
                        const geom::Curvature& k, double alpha);

struct MultimodalOutput {
  Vec f1, f2;  // refined per-modality features (width dim)
  DecomposedFeatures features;
  geom::PoincarePoint emb_sha, emb_spe1, emb_spe2, emb_fused;
  std::pair<double, double> probs_sha, probs_spe1, probs_spe2, probs_fused;
};

// Full per-sample forward: backbones+FC -> decomposition -> per-component
// exp_0/clip -> fusion -> four classifier heads.
MultimodalOutput multimodal_forward(const MultimodalModel& m, const Vec& x1, const Vec& x2);

// Tape counterpart exposing everything the multimodal objective needs:
// refined features for the shared-distance term, embeddings for the
// contrastive terms, bonafide probabilities for the BCE terms.
struct MultimodalTrace {
  ad::Var f1, f2, f_sha, f_spe1, f_spe2;
  ad::Var emb_sha, emb_spe1, emb_spe2, emb_fused;
  ad::Var p1_sha, p1_spe1, p1_spe2, p1_fused;
};

MultimodalTrace multimodal_forward(ad::Tape& t, nn::ParamBinding& b, const MultimodalModel& m,
                                   const Vec& x1, const Vec& x2);

}  // namespace hypball::mm
