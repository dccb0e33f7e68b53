#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hypball/autodiff.hpp"
#include "hypball/geometry.hpp"
#include "hypball/geometry_ad.hpp"
#include "hypball/rng.hpp"

namespace hypball::nn {

using vm::Vec;

// Named trainable array. Names double as checkpoint keys
// (e.g. "backbone.0.weight", "head.p_pre.0").
struct Param {
  std::string name;
  Vec value;
};

// Maps parameters to leaf variables on one tape, created lazily on first use.
// After backward(), gradients are read back through the same binding.
class ParamBinding {
 public:
  explicit ParamBinding(ad::Tape& tape) : tape_(&tape) {}

  ad::Var var_of(const Param& p) {
    auto it = vars_.find(&p);
    if (it != vars_.end()) return it->second;
    ad::Var v = tape_->leaf(p.value);
    vars_.emplace(&p, v);
    return v;
  }

  // Zero when the parameter did not participate in the forward pass.
  Vec grad_of(const Param& p) const {
    auto it = vars_.find(&p);
    if (it == vars_.end()) return Vec(p.value.size(), 0.0);
    auto g = tape_->grad(it->second);
    return Vec(g.begin(), g.end());
  }

  ad::Tape& tape() { return *tape_; }

 private:
  ad::Tape* tape_;
  std::unordered_map<const Param*, ad::Var> vars_;
};

enum class Activation { kNone, kRelu };

// activation(Wx + b) with W stored row-major (out x in).
struct AffineLayer {
  int in = 0;
  int out = 0;
  Activation activation = Activation::kNone;
  Param weight;
  Param bias;

  Vec forward(const Vec& x) const;
  ad::Var forward(ad::Tape& t, ParamBinding& b, ad::Var x) const;
  void collect(std::vector<Param*>& params);
};

// Weights ~ N(0, 1/sqrt(in)), zero bias.
AffineLayer make_affine(const std::string& prefix, int in, int out, Activation act, Rng& rng);
// Square identity layer, no activation; used by the refiner test mode.
AffineLayer make_identity_affine(const std::string& prefix, int dim);

// A stack of affine layers; serves as the toy backbone and as the
// modal-share / modal-specific refiners.
struct Mlp {
  std::vector<AffineLayer> layers;

  Vec forward(const Vec& x) const;
  ad::Var forward(ad::Tape& t, ParamBinding& b, ad::Var x) const;
  void collect(std::vector<Param*>& params);
  int in_width() const { return layers.empty() ? 0 : layers.front().in; }
  int out_width() const { return layers.empty() ? 0 : layers.back().out; }
};

// Desk-scale feature extractor: two relu layers of width `hidden`.
Mlp make_toy_backbone(const std::string& prefix, int in, int hidden, Rng& rng);
// One hidden relu layer of width `out`, then a linear output of width `out`.
Mlp make_refiner(const std::string& prefix, int in, int out, Rng& rng);
// Pass-through refiner (single identity layer); test mode.
Mlp make_identity_refiner(const std::string& prefix, int dim);

Vec affine_forward(const AffineLayer& layer, const Vec& x);
Vec refine_forward(const Mlp& net, const Vec& x);

// Geodesic-margin binary classifier on the ball. Class points are stored as
// Euclidean pre-images p_pre and mapped through exp_0 every forward pass, so
// a plain Euclidean optimizer keeps them on the manifold. The tangent
// directions a_k are free arrays with a 1e-12 norm floor.
struct HypBLRHead {
  geom::Curvature curvature;
  int dim = 0;
  Param p_pre[2];
  Param a[2];

  std::pair<double, double> scores(const geom::PoincarePoint& x) const;
  std::pair<ad::Var, ad::Var> scores(ad::Tape& t, ParamBinding& b, ad::Var x) const;
  void collect(std::vector<Param*>& params);
};

// p_pre = 0, a ~ N(0, 0.01).
HypBLRHead make_hyp_blr_head(const std::string& prefix, int dim, const geom::Curvature& k,
                             Rng& rng);

// (score_0, score_1) -> (p_0, p_1) via max-subtracted softmax.
std::pair<double, double> hyp_blr_probs(std::pair<double, double> scores);
std::pair<ad::Var, ad::Var> hyp_blr_probs(ad::Tape& t, std::pair<ad::Var, ad::Var> scores);

// Euclidean-baseline classifier: a single linear layer producing two scores.
struct LinearHead {
  AffineLayer linear;

  std::pair<double, double> scores(const Vec& x) const;
  std::pair<ad::Var, ad::Var> scores(ad::Tape& t, ParamBinding& b, ad::Var x) const;
  void collect(std::vector<Param*>& params);
};

LinearHead make_linear_head(const std::string& prefix, int dim, Rng& rng);

}  // namespace hypball::nn
