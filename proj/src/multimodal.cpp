#include "hypball/multimodal.hpp"

#include "hypball/errors.hpp"

namespace hypball::mm {

namespace {

Vec concat(const Vec& a, const Vec& b) {
  Vec out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

geom::PoincarePoint lift(const Vec& f, const geom::Curvature& k, double alpha) {
  return geom::clip_to_ball(geom::exp_map_origin(f, k).coords, alpha, k);
}

ad::Var lift(ad::Tape& t, ad::Var f, const geom::Curvature& k, double alpha) {
  return ad::clip_to_ball(t, ad::exp_map_origin(t, f, k), alpha, k);
}

}  // namespace

void MultimodalModel::collect(std::vector<nn::Param*>& params) {
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

int MultimodalModel::input_width(int modality) const {
  if (modality == 1) return backbone1.in_width();
  if (modality == 2) return backbone2.in_width();
  throw UsageError("input_width: modality must be 1 or 2");
}

MultimodalModel make_multimodal_model(int in1, int in2, int hidden, int dim,
                                      const geom::Curvature& k, double alpha, Rng& rng) {
  if (in1 <= 0 || in2 <= 0 || hidden <= 0 || dim <= 0)
    throw UsageError("make_multimodal_model: widths must be positive");
  MultimodalModel m;
  m.curvature = k;
  m.alpha = alpha;
  m.dim = dim;
  m.backbone1 = nn::make_toy_backbone("backbone1", in1, hidden, rng);
  m.fc1 = nn::make_affine("fc1", hidden, dim, nn::Activation::kNone, rng);
  m.backbone2 = nn::make_toy_backbone("backbone2", in2, hidden, rng);
  m.fc2 = nn::make_affine("fc2", hidden, dim, nn::Activation::kNone, rng);
  m.s_sha = nn::make_refiner("s_sha", 2 * dim, dim, rng);
  m.s_spe1 = nn::make_refiner("s_spe1", dim, dim, rng);
  m.s_spe2 = nn::make_refiner("s_spe2", dim, dim, rng);
  m.head_sha = nn::make_hyp_blr_head("head_sha", dim, k, rng);
  m.head_spe1 = nn::make_hyp_blr_head("head_spe1", dim, k, rng);
  m.head_spe2 = nn::make_hyp_blr_head("head_spe2", dim, k, rng);
  m.head_fus = nn::make_hyp_blr_head("head_fus", dim, k, rng);
  return m;
}

Vec extract_shared(const Vec& f1, const Vec& f2, const nn::Mlp& s_sha) {
  if (f1.size() != f2.size()) throw UsageError("extract_shared: modality widths differ");
  if (s_sha.in_width() != static_cast<int>(f1.size() + f2.size()))
    throw UsageError("extract_shared: refiner input width is not 2*dim");
  return s_sha.forward(concat(f1, f2));
}

ad::Var extract_shared(ad::Tape& t, nn::ParamBinding& b, ad::Var f1, ad::Var f2,
                       const nn::Mlp& s_sha) {
  if (s_sha.in_width() != t.length(f1) + t.length(f2))
    throw UsageError("extract_shared: refiner input width is not 2*dim");
  return s_sha.forward(t, b, t.concat(f1, f2));
}

DecomposedFeatures decompose(const Vec& f1, const Vec& f2, const Vec& f_sha,
                             const nn::Mlp& s_spe1, const nn::Mlp& s_spe2) {
  if (f1.size() != f_sha.size() || f2.size() != f_sha.size())
    throw UsageError("decompose: feature widths differ");
  return DecomposedFeatures{f_sha, s_spe1.forward(vm::sub(f1, f_sha)),
                            s_spe2.forward(vm::sub(f2, f_sha))};
}

FusedEmbedding fuse_points(const geom::PoincarePoint& sha, const geom::PoincarePoint& spe1,
                           const geom::PoincarePoint& spe2, double alpha) {
  geom::PoincarePoint inner = geom::mobius_add(spe1, spe2);
  geom::PoincarePoint fused = geom::mobius_add(sha, inner);
  return FusedEmbedding{geom::clip_to_ball(fused.coords, alpha, fused.curvature)};
}

FusedEmbedding hyperbolic_fuse(const DecomposedFeatures& d, const geom::Curvature& k,
                               double alpha) {
  return fuse_points(lift(d.f_sha, k, alpha), lift(d.f_spe1, k, alpha), lift(d.f_spe2, k, alpha),
                     alpha);
}

ad::Var hyperbolic_fuse(ad::Tape& t, ad::Var f_sha, ad::Var f_spe1, ad::Var f_spe2,
                        const geom::Curvature& k, double alpha) {
  ad::Var inner = ad::mobius_add(t, lift(t, f_spe1, k, alpha), lift(t, f_spe2, k, alpha), k);
  ad::Var fused = ad::mobius_add(t, lift(t, f_sha, k, alpha), inner, k);
  return ad::clip_to_ball(t, fused, alpha, k);
}

MultimodalOutput multimodal_forward(const MultimodalModel& m, const Vec& x1, const Vec& x2) {
  if (x1.empty() || x2.empty()) throw ProtocolError("multimodal_forward: a modality is missing");
  MultimodalOutput out;
  out.f1 = m.fc1.forward(m.backbone1.forward(x1));
  out.f2 = m.fc2.forward(m.backbone2.forward(x2));
  Vec f_sha = extract_shared(out.f1, out.f2, m.s_sha);
  out.features = decompose(out.f1, out.f2, f_sha, m.s_spe1, m.s_spe2);

  out.emb_sha = lift(out.features.f_sha, m.curvature, m.alpha);
  out.emb_spe1 = lift(out.features.f_spe1, m.curvature, m.alpha);
  out.emb_spe2 = lift(out.features.f_spe2, m.curvature, m.alpha);
  out.emb_fused = fuse_points(out.emb_sha, out.emb_spe1, out.emb_spe2, m.alpha).point;

  out.probs_sha = nn::hyp_blr_probs(m.head_sha.scores(out.emb_sha));
  out.probs_spe1 = nn::hyp_blr_probs(m.head_spe1.scores(out.emb_spe1));
  out.probs_spe2 = nn::hyp_blr_probs(m.head_spe2.scores(out.emb_spe2));
  out.probs_fused = nn::hyp_blr_probs(m.head_fus.scores(out.emb_fused));
  return out;
}

MultimodalTrace multimodal_forward(ad::Tape& t, nn::ParamBinding& b, const MultimodalModel& m,
                                   const Vec& x1, const Vec& x2) {
  if (x1.empty() || x2.empty()) throw ProtocolError("multimodal_forward: a modality is missing");
  MultimodalTrace tr;
  tr.f1 = m.fc1.forward(t, b, m.backbone1.forward(t, b, t.leaf(x1)));
  tr.f2 = m.fc2.forward(t, b, m.backbone2.forward(t, b, t.leaf(x2)));
  tr.f_sha = extract_shared(t, b, tr.f1, tr.f2, m.s_sha);
  tr.f_spe1 = m.s_spe1.forward(t, b, t.sub(tr.f1, tr.f_sha));
  tr.f_spe2 = m.s_spe2.forward(t, b, t.sub(tr.f2, tr.f_sha));

  tr.emb_sha = lift(t, tr.f_sha, m.curvature, m.alpha);
  tr.emb_spe1 = lift(t, tr.f_spe1, m.curvature, m.alpha);
  tr.emb_spe2 = lift(t, tr.f_spe2, m.curvature, m.alpha);
  ad::Var inner = ad::mobius_add(t, tr.emb_spe1, tr.emb_spe2, m.curvature);
  tr.emb_fused =
      ad::clip_to_ball(t, ad::mobius_add(t, tr.emb_sha, inner, m.curvature), m.alpha, m.curvature);

  tr.p1_sha = nn::hyp_blr_probs(t, m.head_sha.scores(t, b, tr.emb_sha)).second;
  tr.p1_spe1 = nn::hyp_blr_probs(t, m.head_spe1.scores(t, b, tr.emb_spe1)).second;
  tr.p1_spe2 = nn::hyp_blr_probs(t, m.head_spe2.scores(t, b, tr.emb_spe2)).second;
  tr.p1_fused = nn::hyp_blr_probs(t, m.head_fus.scores(t, b, tr.emb_fused)).second;
  return tr;
}

}  // namespace hypball::mm
