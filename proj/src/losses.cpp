#include "hypball/losses.hpp"

#include <algorithm>
#include <cmath>

#include "hypball/errors.hpp"

namespace hypball::loss {

namespace {

constexpr double kProbClamp = 1e-12;

void check_weight(double v, const char* name) {
  if (!std::isfinite(v)) throw UsageError(std::string("loss weight not finite: ") + name);
}

// Average of -log(softmax) terms for one anchor class against the other.
// l_{i,j} = d(x_i, x_j)/tau + log(exp(-d(x_i,x_j)/tau) + sum_t exp(-d(x_i,y_t)/tau)),
// an overflow-free rewrite of Eq.-style -log(num / (num + sum)): every
// exponential has a nonpositive argument and the numerator's log is exact.
double pair_average(const std::vector<geom::PoincarePoint>& anchors,
                    const std::vector<geom::PoincarePoint>& negatives, double tau) {
  const std::size_t n = anchors.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double neg_sum = 0.0;
    for (const auto& y : negatives) neg_sum += std::exp(-geom::hyp_distance(anchors[i], y) / tau);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = geom::hyp_distance(anchors[i], anchors[j]);
      total += d / tau + std::log(std::exp(-d / tau) + neg_sum);
    }
  }
  return total / static_cast<double>(n);
}

ad::Var pair_average(ad::Tape& t, const std::vector<ad::Var>& anchors,
                     const std::vector<ad::Var>& negatives, double tau,
                     const geom::Curvature& k) {
  const std::size_t n = anchors.size();
  ad::Var total = t.scalar(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    ad::Var neg_sum = t.scalar(0.0);
    for (const auto& y : negatives) {
      ad::Var d = ad::hyp_distance(t, anchors[i], y, k);
      neg_sum = t.add(neg_sum, t.exp(t.scale_const(d, -1.0 / tau)));
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      ad::Var d = ad::hyp_distance(t, anchors[i], anchors[j], k);
      ad::Var denom = t.add(t.exp(t.scale_const(d, -1.0 / tau)), neg_sum);
      total = t.add(total, t.add(t.scale_const(d, 1.0 / tau), t.log(denom)));
    }
  }
  return t.scale_const(total, 1.0 / static_cast<double>(n));
}

void check_mode_counts(ContrastiveMode mode, std::size_t n_bona, std::size_t n_att) {
  const bool need_bf = mode == ContrastiveMode::kBF || mode == ContrastiveMode::kBA;
  const bool need_att = mode == ContrastiveMode::kAtt || mode == ContrastiveMode::kBA;
  if (mode == ContrastiveMode::kNone) throw UsageError("contrastive_loss: mode none");
  if (need_bf && (n_bona < 2 || n_att < 1))
    throw ProtocolError("contrastive_loss: bonafide pairs need >=2 bonafide and >=1 attack");
  if (need_att && (n_att < 2 || n_bona < 1))
    throw ProtocolError("contrastive_loss: attack pairs need >=2 attacks and >=1 bonafide");
}

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw UsageError("contrastive_loss: tau must be > 0");
}

}  // namespace

void LossWeights::validate() const {
  check_weight(lambda1, "lambda1");
  check_weight(lambda2, "lambda2");
  check_weight(gamma1, "gamma1");
  check_weight(gamma2, "gamma2");
  check_weight(gamma3, "gamma3");
  check_weight(gamma4, "gamma4");
  check_weight(tau, "tau");
  if (!(tau > 0.0)) throw UsageError("loss weight tau must be > 0");
}

double hyp_bce(double p1, int label) {
  if (label != 0 && label != 1) throw UsageError("hyp_bce: label must be 0 or 1");
  const double p = std::clamp(p1, kProbClamp, 1.0 - kProbClamp);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

ad::Var hyp_bce(ad::Tape& t, ad::Var p1, int label) {
  if (label != 0 && label != 1) throw UsageError("hyp_bce: label must be 0 or 1");
  ad::Var p = t.clamp(p1, kProbClamp, 1.0 - kProbClamp);
  ad::Var inner = label == 1 ? p : t.add_const(t.neg(p), 1.0);
  return t.neg(t.log(inner));
}

double contrastive_loss(const std::vector<geom::PoincarePoint>& bonafide,
                        const std::vector<geom::PoincarePoint>& attacks, ContrastiveMode mode,
                        double tau) {
  check_tau(tau);
  check_mode_counts(mode, bonafide.size(), attacks.size());
  double out = 0.0;
  if (mode == ContrastiveMode::kBF || mode == ContrastiveMode::kBA)
    out += pair_average(bonafide, attacks, tau);
  if (mode == ContrastiveMode::kAtt || mode == ContrastiveMode::kBA)
    out += pair_average(attacks, bonafide, tau);
  return out;
}

ad::Var contrastive_loss(ad::Tape& t, const std::vector<ad::Var>& bonafide,
                         const std::vector<ad::Var>& attacks, ContrastiveMode mode, double tau,
                         const geom::Curvature& k) {
  check_tau(tau);
  check_mode_counts(mode, bonafide.size(), attacks.size());
  ad::Var out = t.scalar(0.0);
  if (mode == ContrastiveMode::kBF || mode == ContrastiveMode::kBA)
    out = t.add(out, pair_average(t, bonafide, attacks, tau, k));
  if (mode == ContrastiveMode::kAtt || mode == ContrastiveMode::kBA)
    out = t.add(out, pair_average(t, attacks, bonafide, tau, k));
  return out;
}

double distance_loss(const Vec& f_sha, const Vec& f1, const Vec& f2, int batch, int dim) {
  const std::size_t want = static_cast<std::size_t>(batch) * static_cast<std::size_t>(dim);
  if (batch <= 0 || dim <= 0 || f_sha.size() != want || f1.size() != want || f2.size() != want)
    throw UsageError("distance_loss: array shapes disagree with batch x dim");
  double total = 0.0;
  for (std::size_t i = 0; i < want; ++i) {
    const double d1 = f_sha[i] - f1[i];
    const double d2 = f_sha[i] - f2[i];
    total += d1 * d1 + d2 * d2;
  }
  return total / (static_cast<double>(batch) * static_cast<double>(dim));
}

ad::Var distance_loss(ad::Tape& t, const std::vector<ad::Var>& f_sha,
                      const std::vector<ad::Var>& f1, const std::vector<ad::Var>& f2) {
  if (f_sha.empty() || f_sha.size() != f1.size() || f_sha.size() != f2.size())
    throw UsageError("distance_loss: batch lists disagree");
  const int dim = t.length(f_sha[0]);
  ad::Var total = t.scalar(0.0);
  for (std::size_t b = 0; b < f_sha.size(); ++b) {
    ad::Var d1 = t.sub(f_sha[b], f1[b]);
    ad::Var d2 = t.sub(f_sha[b], f2[b]);
    total = t.add(total, t.add(t.dot(d1, d1), t.dot(d2, d2)));
  }
  return t.scale_const(total, 1.0 / (static_cast<double>(f_sha.size()) * dim));
}

double unimodal_total_loss(double bce, double contrastive_bf, const LossWeights& w) {
  w.validate();
  return w.lambda1 * bce + w.lambda2 * contrastive_bf;
}

ad::Var unimodal_total_loss(ad::Tape& t, ad::Var bce, ad::Var contrastive_bf,
                            const LossWeights& w) {
  w.validate();
  return t.add(t.scale_const(bce, w.lambda1), t.scale_const(contrastive_bf, w.lambda2));
}

double multimodal_total_loss(double dis, double decom_bce, double decom_bf, double fus_bf,
                             double fus_bce, const LossWeights& w) {
  w.validate();
  return w.gamma1 * dis + w.gamma2 * decom_bce + w.gamma3 * decom_bf + w.gamma4 * fus_bf +
         fus_bce;
}

ad::Var multimodal_total_loss(ad::Tape& t, ad::Var dis, ad::Var decom_bce, ad::Var decom_bf,
                              ad::Var fus_bf, ad::Var fus_bce, const LossWeights& w) {
  w.validate();
  ad::Var out = t.scale_const(dis, w.gamma1);
  out = t.add(out, t.scale_const(decom_bce, w.gamma2));
  out = t.add(out, t.scale_const(decom_bf, w.gamma3));
  out = t.add(out, t.scale_const(fus_bf, w.gamma4));
  return t.add(out, fus_bce);
}

}  // namespace hypball::loss
