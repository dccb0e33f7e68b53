#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "hypball/errors.hpp"
#include "hypball/geometry.hpp"
#include "hypball/losses.hpp"
#include "hypball/rng.hpp"

using namespace hypball;
using geom::PoincarePoint;
using loss::ContrastiveMode;
using vm::Vec;

namespace {

PoincarePoint random_point(Rng& rng, const geom::Curvature& k, double frac) {
  Vec v = rng.normal_vec(3);
  const double target = rng.uniform(0.05, frac) / std::sqrt(k.c);
  const double n = vm::norm(v);
  for (auto& x : v) x *= target / n;
  return geom::make_point(std::move(v), k);
}

}  // namespace

TEST_CASE("binary cross entropy closed forms") {
  CHECK(loss::hyp_bce(1.0, 1) < 2e-12);  // clamped at 1 - 1e-12
  CHECK(loss::hyp_bce(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss::hyp_bce(0.25, 0) == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
  CHECK(loss::hyp_bce(0.0, 1) > 0.0);  // clamp keeps the log finite
  CHECK(std::isfinite(loss::hyp_bce(0.0, 1)));
  CHECK_THROWS_AS(loss::hyp_bce(0.5, 2), UsageError);
  CHECK_THROWS_AS(loss::hyp_bce(0.5, -1), UsageError);
}

TEST_CASE("contrastive loss: coincident and one-negative closed forms") {
  const geom::Curvature k(1.0);
  const auto o = geom::origin(2, k);

  // Everything at one point: every exponent is 0, each pair gives ln 2.
  const double coincident =
      loss::contrastive_loss({o, o}, {o}, ContrastiveMode::kBF, 1.0);
  CHECK(coincident == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Attack at geodesic distance ln 3 from the coincident bonafide pair:
  // l = -ln(1 / (1 + exp(-ln 3))) = ln(4/3).
  const auto attack = geom::make_point({0.5, 0.0}, k);  // d(0, .) = 2 atanh(0.5) = ln 3
  const double one_neg =
      loss::contrastive_loss({o, o}, {attack}, ContrastiveMode::kBF, 1.0);
  CHECK(one_neg == doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-12));

  // Attack pushed towards the boundary: the denominator collapses onto the
  // numerator and the loss vanishes.
  const auto far = geom::make_point({0.9989, 0.0}, k);
  const double faded = loss::contrastive_loss({o, o}, {far}, ContrastiveMode::kBF, 1.0);
  CHECK(faded < 1e-3);
  CHECK(faded > 0.0);
}

TEST_CASE("farther attacks strictly lower the bonafide loss") {
  const geom::Curvature k(1.0);
  const auto o = geom::origin(2, k);
  const auto near_att = geom::make_point({0.3, 0.0}, k);
  const auto far_att = geom::make_point({0.6, 0.0}, k);
  const double with_near = loss::contrastive_loss({o, o}, {near_att}, ContrastiveMode::kBF, 1.0);
  const double with_far = loss::contrastive_loss({o, o}, {far_att}, ContrastiveMode::kBF, 1.0);
  CHECK(with_far < with_near);
}

TEST_CASE("contrastive loss is permutation invariant") {
  const geom::Curvature k(0.1);
  Rng rng(8);
  std::vector<PoincarePoint> bona, att;
  for (int i = 0; i < 4; ++i) bona.push_back(random_point(rng, k, 0.7));
  for (int i = 0; i < 3; ++i) att.push_back(random_point(rng, k, 0.7));
  const double base = loss::contrastive_loss(bona, att, ContrastiveMode::kBA, 1.0);

  std::vector<PoincarePoint> bona_p = {bona[2], bona[0], bona[3], bona[1]};
  std::vector<PoincarePoint> att_p = {att[1], att[2], att[0]};
  const double permuted = loss::contrastive_loss(bona_p, att_p, ContrastiveMode::kBA, 1.0);
  CHECK(permuted == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("the combined mode decomposes into its two one-sided averages") {
  const geom::Curvature k(0.1);
  Rng rng(12);
  std::vector<PoincarePoint> bona, att;
  for (int i = 0; i < 5; ++i) bona.push_back(random_point(rng, k, 0.8));
  for (int i = 0; i < 4; ++i) att.push_back(random_point(rng, k, 0.8));
  const double both = loss::contrastive_loss(bona, att, ContrastiveMode::kBA, 0.7);
  const double bf = loss::contrastive_loss(bona, att, ContrastiveMode::kBF, 0.7);
  const double at = loss::contrastive_loss(bona, att, ContrastiveMode::kAtt, 0.7);
  CHECK(both == doctest::Approx(bf + at).epsilon(1e-12));
}

TEST_CASE("contrastive loss enforces pair availability and tau") {
  const geom::Curvature k(1.0);
  const auto o = geom::origin(2, k);
  CHECK_THROWS_AS(loss::contrastive_loss({o}, {o}, ContrastiveMode::kBF, 1.0), ProtocolError);
  CHECK_THROWS_AS(loss::contrastive_loss({o, o}, {}, ContrastiveMode::kBF, 1.0), ProtocolError);
  CHECK_THROWS_AS(loss::contrastive_loss({o, o}, {o}, ContrastiveMode::kAtt, 1.0), ProtocolError);
  CHECK_THROWS_AS(loss::contrastive_loss({o}, {o, o}, ContrastiveMode::kBA, 1.0), ProtocolError);
  CHECK_THROWS_AS(loss::contrastive_loss({o, o}, {o}, ContrastiveMode::kNone, 1.0), UsageError);
  CHECK_THROWS_AS(loss::contrastive_loss({o, o}, {o}, ContrastiveMode::kBF, 0.0), UsageError);
  CHECK_THROWS_AS(loss::contrastive_loss({o, o}, {o}, ContrastiveMode::kBF, -1.0), UsageError);
}

TEST_CASE("tape contrastive value matches the double path") {
  const geom::Curvature k(0.1);
  Rng rng(30);
  std::vector<PoincarePoint> bona, att;
  for (int i = 0; i < 3; ++i) bona.push_back(random_point(rng, k, 0.6));
  for (int i = 0; i < 2; ++i) att.push_back(random_point(rng, k, 0.6));
  const double expected = loss::contrastive_loss(bona, att, ContrastiveMode::kBA, 1.3);

  ad::Tape t;
  std::vector<ad::Var> vb, va;
  for (const auto& p : bona) vb.push_back(t.leaf(p.coords));
  for (const auto& p : att) va.push_back(t.leaf(p.coords));
  const double actual =
      t.value_scalar(loss::contrastive_loss(t, vb, va, ContrastiveMode::kBA, 1.3, k));
  CHECK(actual == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("shared-distance loss closed forms") {
  CHECK(loss::distance_loss({1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}, 1, 2) == 0.0);

  // B=1, dim=2: (1/1)(1/2)(|(0,0)-(1,0)|^2 + |(0,0)-(0,1)|^2) = 1.
  CHECK(loss::distance_loss({0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, 1, 2) ==
        doctest::Approx(1.0).epsilon(1e-12));

  const double base = loss::distance_loss({0.1, 0.4}, {0.5, -0.2}, {0.3, 0.9}, 1, 2);
  const double doubled = loss::distance_loss({0.2, 0.8}, {1.0, -0.4}, {0.6, 1.8}, 1, 2);
  CHECK(doubled == doctest::Approx(4.0 * base).epsilon(1e-12));

  CHECK_THROWS_AS(loss::distance_loss({0.0}, {1.0, 0.0}, {0.0, 1.0}, 1, 2), UsageError);
  CHECK_THROWS_AS(loss::distance_loss({0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, 2, 2), UsageError);
}

TEST_CASE("single-modality total loss weighting") {
  loss::LossWeights w;  // lambda1 = 1.0, lambda2 = 0.1
  const double ln2 = std::log(2.0);
  CHECK(loss::unimodal_total_loss(ln2, ln2, w) == doctest::Approx(1.1 * ln2).epsilon(1e-12));
  w.lambda2 = 0.0;
  CHECK(loss::unimodal_total_loss(ln2, 123.0, w) == doctest::Approx(ln2).epsilon(1e-15));
  CHECK(loss::unimodal_total_loss(0.0, 0.0, w) == 0.0);
}

TEST_CASE("two-modality total loss weighting") {
  loss::LossWeights w;  // all gammas 1.0
  CHECK(loss::multimodal_total_loss(1.0, 1.0, 1.0, 1.0, 1.0, w) == 5.0);
  w.gamma1 = w.gamma3 = w.gamma4 = 0.2;
  CHECK(loss::multimodal_total_loss(1.0, 1.0, 1.0, 1.0, 1.0, w) ==
        doctest::Approx(2.6).epsilon(1e-12));
  loss::LossWeights zero_ok;
  CHECK(loss::multimodal_total_loss(0.0, 0.0, 0.0, 0.0, 0.0, zero_ok) == 0.0);
}

TEST_CASE("loss weights validation") {
  loss::LossWeights w;
  CHECK_NOTHROW(w.validate());
  w.tau = 0.0;
  CHECK_THROWS_AS(w.validate(), UsageError);
  w.tau = 1.0;
  w.lambda1 = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(w.validate(), UsageError);
}
