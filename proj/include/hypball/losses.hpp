#pragma once

#include <utility>
#include <vector>

#include "hypball/autodiff.hpp"
#include "hypball/geometry.hpp"
#include "hypball/geometry_ad.hpp"

namespace hypball::loss {

using vm::Vec;

// Scalar weights combining the individual objectives into the unimodal and
// multimodal totals. tau is the contrastive temperature.
struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 0.1;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double gamma3 = 1.0;
  double gamma4 = 1.0;
  double tau = 1.0;

  // Throws UsageError on non-finite fields or tau <= 0.
  void validate() const;
};

enum class ContrastiveMode { kBF, kAtt, kBA, kNone };

// Binary cross entropy on the bonafide probability. p1 is clamped to
// [1e-12, 1 - 1e-12] before the logs, so the result is always finite.
double hyp_bce(double p1, int label);
ad::Var hyp_bce(ad::Tape& t, ad::Var p1, int label);

// Contrastive objective over geodesic distances. Each anchor's positive pair
// competes against that anchor's distances to every sample of the opposite
// class; ordered pairs i != j are averaged with a 1/N (resp. 1/M) prefactor.
// kBA is the sum of the bonafide-pair and attack-pair averages.
//
// Requirements: kBF needs >= 2 bonafide and >= 1 attack, kAtt the mirror
// image, kBA both; otherwise ProtocolError (callers typically skip the term
// for that batch). kNone is rejected with UsageError.
double contrastive_loss(const std::vector<geom::PoincarePoint>& bonafide,
                        const std::vector<geom::PoincarePoint>& attacks, ContrastiveMode mode,
                        double tau);
ad::Var contrastive_loss(ad::Tape& t, const std::vector<ad::Var>& bonafide,
                         const std::vector<ad::Var>& attacks, ContrastiveMode mode, double tau,
                         const geom::Curvature& k);

// Mean squared deviation of the shared feature from each modality feature:
// (1/B)(1/dim) * (|f_sha - f1|^2 + |f_sha - f2|^2), arrays flattened
// batch-major with B * dim entries each.
double distance_loss(const Vec& f_sha, const Vec& f1, const Vec& f2, int batch, int dim);
ad::Var distance_loss(ad::Tape& t, const std::vector<ad::Var>& f_sha,
                      const std::vector<ad::Var>& f1, const std::vector<ad::Var>& f2);

// lambda1 * bce + lambda2 * contrastive_bf.
double unimodal_total_loss(double bce, double contrastive_bf, const LossWeights& w);
ad::Var unimodal_total_loss(ad::Tape& t, ad::Var bce, ad::Var contrastive_bf,
                            const LossWeights& w);

// gamma1 * dis + gamma2 * decom_bce + gamma3 * decom_bf + gamma4 * fus_bf
// + fus_bce; the fused BCE coefficient is fixed at 1.
double multimodal_total_loss(double dis, double decom_bce, double decom_bf, double fus_bf,
                             double fus_bce, const LossWeights& w);
ad::Var multimodal_total_loss(ad::Tape& t, ad::Var dis, ad::Var decom_bce, ad::Var decom_bf,
                              ad::Var fus_bf, ad::Var fus_bce, const LossWeights& w);

}  // namespace hypball::loss
