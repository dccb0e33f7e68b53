#include "hypball/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hypball::nn {

namespace {
constexpr double kDirectionNormFloor = 1e-12;
}

Vec AffineLayer::forward(const Vec& x) const {
  if (static_cast<int>(x.size()) != in) throw UsageError("affine_forward: input width mismatch");
  Vec y(static_cast<std::size_t>(out));
  for (int i = 0; i < out; ++i) {
    double s = bias.value[static_cast<std::size_t>(i)];
    const double* row = weight.value.data() + static_cast<std::size_t>(i) * in;
    for (int j = 0; j < in; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = activation == Activation::kRelu ? std::max(s, 0.0) : s;
  }
  return y;
}

ad::Var AffineLayer::forward(ad::Tape& t, ParamBinding& b, ad::Var x) const {
  if (t.length(x) != in) throw UsageError("affine_forward: input width mismatch");
  ad::Var y = t.add(t.matvec(b.var_of(weight), x, out, in), b.var_of(bias));
  return activation == Activation::kRelu ? t.relu(y) : y;
}

void AffineLayer::collect(std::vector<Param*>& params) {
  params.push_back(&weight);
  params.push_back(&bias);
}

AffineLayer make_affine(const std::string& prefix, int in, int out, Activation act, Rng& rng) {
  AffineLayer layer;
  layer.in = in;
  layer.out = out;
  layer.activation = act;
  layer.weight = Param{prefix + ".weight",
                       rng.normal_vec(static_cast<std::size_t>(in) * out, 0.0, 1.0 / std::sqrt(in))};
  layer.bias = Param{prefix + ".bias", Vec(static_cast<std::size_t>(out), 0.0)};
  return layer;
}

AffineLayer make_identity_affine(const std::string& prefix, int dim) {
  AffineLayer layer;
  layer.in = dim;
  layer.out = dim;
  layer.activation = Activation::kNone;
  Vec w(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) w[static_cast<std::size_t>(i) * dim + i] = 1.0;
  layer.weight = Param{prefix + ".weight", std::move(w)};
  layer.bias = Param{prefix + ".bias", Vec(static_cast<std::size_t>(dim), 0.0)};
  return layer;
}

Vec Mlp::forward(const Vec& x) const {
  Vec cur = x;
  for (const auto& layer : layers) cur = layer.forward(cur);
  return cur;
}

ad::Var Mlp::forward(ad::Tape& t, ParamBinding& b, ad::Var x) const {
  ad::Var cur = x;
  for (const auto& layer : layers) cur = layer.forward(t, b, cur);
  return cur;
}

void Mlp::collect(std::vector<Param*>& params) {
  for (auto& layer : layers) layer.collect(params);
}

Mlp make_toy_backbone(const std::string& prefix, int in, int hidden, Rng& rng) {
  Mlp net;
  net.layers.push_back(make_affine(prefix + ".0", in, hidden, Activation::kRelu, rng));
  net.layers.push_back(make_affine(prefix + ".1", hidden, hidden, Activation::kRelu, rng));
  return net;
}

Mlp make_refiner(const std::string& prefix, int in, int out, Rng& rng) {
  Mlp net;
  net.layers.push_back(make_affine(prefix + ".0", in, out, Activation::kRelu, rng));
  net.layers.push_back(make_affine(prefix + ".1", out, out, Activation::kNone, rng));
  return net;
}

Mlp make_identity_refiner(const std::string& prefix, int dim) {
  Mlp net;
  net.layers.push_back(make_identity_affine(prefix + ".0", dim));
  return net;
}

Vec affine_forward(const AffineLayer& layer, const Vec& x) { return layer.forward(x); }
Vec refine_forward(const Mlp& net, const Vec& x) { return net.forward(x); }

std::pair<double, double> HypBLRHead::scores(const geom::PoincarePoint& x) const {
  if (!(x.curvature == curvature)) throw UsageError("hyp_blr_scores: curvature mismatch");
  if (static_cast<int>(x.dim()) != dim) throw UsageError("hyp_blr_scores: dimension mismatch");
  const double c = curvature.c;
  const double sqrt_c = std::sqrt(c);
  double out[2];
  for (int k = 0; k < 2; ++k) {
    const geom::PoincarePoint p = geom::exp_map_origin(p_pre[k].value, curvature);
    const double na = std::max(vm::norm(a[k].value), kDirectionNormFloor);
    const Vec diff = geom::detail::mobius_add_raw(vm::neg(p.coords), x.coords, c);
    const double lam = 2.0 / (1.0 - c * vm::norm_sq(p.coords));
    const double arg =
        2.0 * sqrt_c * vm::dot(diff, a[k].value) / ((1.0 - c * vm::norm_sq(diff)) * na);
    out[k] = lam * na / sqrt_c * std::asinh(arg);
  }
  return {out[0], out[1]};
}

std::pair<ad::Var, ad::Var> HypBLRHead::scores(ad::Tape& t, ParamBinding& b, ad::Var x) const {
  if (t.length(x) != dim) throw UsageError("hyp_blr_scores: dimension mismatch");
  const double c = curvature.c;
  const double sqrt_c = std::sqrt(c);
  ad::Var out[2];
  for (int k = 0; k < 2; ++k) {
    ad::Var p = ad::exp_map_origin(t, b.var_of(p_pre[k]), curvature);
    ad::Var av = b.var_of(a[k]);
    ad::Var na = t.clamp(t.norm(av), kDirectionNormFloor, std::numeric_limits<double>::infinity());
    ad::Var diff = ad::mobius_add_raw(t, t.neg(p), x, c);
    ad::Var lam = ad::conformal_factor(t, p, curvature);
    ad::Var denom = t.mul(t.add_const(t.scale_const(t.dot(diff, diff), -c), 1.0), na);
    ad::Var arg = t.div(t.scale_const(t.dot(diff, av), 2.0 * sqrt_c), denom);
    out[k] = t.mul(t.scale_const(t.mul(lam, na), 1.0 / sqrt_c), t.asinh(arg));
  }
  return {out[0], out[1]};
}

void HypBLRHead::collect(std::vector<Param*>& params) {
  params.push_back(&p_pre[0]);
  params.push_back(&p_pre[1]);
  params.push_back(&a[0]);
  params.push_back(&a[1]);
}

HypBLRHead make_hyp_blr_head(const std::string& prefix, int dim, const geom::Curvature& k,
                             Rng& rng) {
  HypBLRHead head;
  head.curvature = k;
  head.dim = dim;
  for (int i = 0; i < 2; ++i) {
    head.p_pre[i] = Param{prefix + ".p_pre." + std::to_string(i), Vec(static_cast<std::size_t>(dim), 0.0)};
    head.a[i] = Param{prefix + ".a." + std::to_string(i),
                      rng.normal_vec(static_cast<std::size_t>(dim), 0.0, 0.01)};
  }
  return head;
}

std::pair<double, double> hyp_blr_probs(std::pair<double, double> scores) {
  const double m = std::max(scores.first, scores.second);
  const double g0 = std::exp(scores.first - m);
  const double g1 = std::exp(scores.second - m);
  return {g0 / (g0 + g1), g1 / (g0 + g1)};
}

std::pair<ad::Var, ad::Var> hyp_blr_probs(ad::Tape& t, std::pair<ad::Var, ad::Var> scores) {
  // The shift is a recorded constant; softmax is shift-invariant so the
  // gradient is unaffected.
  const double m = std::max(t.value_scalar(scores.first), t.value_scalar(scores.second));
  ad::Var g0 = t.exp(t.add_const(scores.first, -m));
  ad::Var g1 = t.exp(t.add_const(scores.second, -m));
  ad::Var z = t.add(g0, g1);
  return {t.div(g0, z), t.div(g1, z)};
}

std::pair<double, double> LinearHead::scores(const Vec& x) const {
  Vec y = linear.forward(x);
  return {y[0], y[1]};
}

std::pair<ad::Var, ad::Var> LinearHead::scores(ad::Tape& t, ParamBinding& b, ad::Var x) const {
  // Two matvec rows would need a slice op; two dot products are equivalent.
  ad::Var y = linear.forward(t, b, x);
  ad::Var e0 = t.leaf(Vec{1.0, 0.0});
  ad::Var e1 = t.leaf(Vec{0.0, 1.0});
  return {t.dot(y, e0), t.dot(y, e1)};
}

void LinearHead::collect(std::vector<Param*>& params) { linear.collect(params); }

LinearHead make_linear_head(const std::string& prefix, int dim, Rng& rng) {
  return LinearHead{make_affine(prefix + ".linear", dim, 2, Activation::kNone, rng)};
}

}  // namespace hypball::nn
