#include "hypball/geometry_ad.hpp"

#include <cmath>

namespace hypball::ad {

namespace {

// cap |x| at bound, deciding the branch on the recorded value.
Var project_to_norm(Tape& t, Var x, double bound) {
  Var n = t.norm(x);
  if (t.value_scalar(n) <= bound) return x;
  Var s = t.div(t.scalar(bound), n);
  return t.scale(x, s);
}

}  // namespace

Var conformal_factor(Tape& t, Var x, const geom::Curvature& k) {
  // 2 / (1 - c|x|^2)
  Var x2 = t.dot(x, x);
  Var den = t.add_const(t.scale_const(x2, -k.c), 1.0);
  return t.div(t.scalar(2.0), den);
}

Var mobius_add_raw(Tape& t, Var x, Var y, double c) {
  Var xy = t.dot(x, y);
  Var x2 = t.dot(x, x);
  Var y2 = t.dot(y, y);
  // den = 1 + 2c<x,y> + c^2 |x|^2 |y|^2
  Var two_c_xy = t.scale_const(xy, 2.0 * c);
  Var den = t.add(t.add_const(two_c_xy, 1.0), t.scale_const(t.mul(x2, y2), c * c));
  if (std::abs(t.value_scalar(den)) < geom::kMobiusDenomFloor)
    throw DegenerateInputError("mobius_add: denominator below 1e-15");
  // num = (1 + 2c<x,y> + c|y|^2) x + (1 - c|x|^2) y
  Var coef_x = t.add(t.add_const(two_c_xy, 1.0), t.scale_const(y2, c));
  Var coef_y = t.add_const(t.scale_const(x2, -c), 1.0);
  Var num = t.add(t.scale(x, coef_x), t.scale(y, coef_y));
  return t.scale(num, t.div(t.scalar(1.0), den));
}

Var mobius_add(Tape& t, Var x, Var y, const geom::Curvature& k) {
  return project_to_norm(t, mobius_add_raw(t, x, y, k.c), k.effective_radius());
}

Var hyp_distance(Tape& t, Var x, Var y, const geom::Curvature& k) {
  const double sqrt_c = std::sqrt(k.c);
  Var diff = mobius_add_raw(t, t.neg(x), y, k.c);
  Var arg = t.clamp(t.scale_const(t.norm(diff), sqrt_c), 0.0, 1.0 - geom::kAtanhMargin);
  return t.scale_const(t.atanh(arg), 2.0 / sqrt_c);
}

Var exp_map(Tape& t, Var x, Var v, const geom::Curvature& k) {
  Var nv = t.norm(v);
  if (t.value_scalar(nv) < geom::kNormFloor) return x;
  const double sqrt_c = std::sqrt(k.c);
  Var lam = conformal_factor(t, x, k);
  Var th = t.tanh(t.scale_const(t.mul(lam, nv), sqrt_c / 2.0));
  Var step = t.scale(v, t.div(th, t.scale_const(nv, sqrt_c)));
  return project_to_norm(t, mobius_add_raw(t, x, step, k.c), k.effective_radius());
}

Var exp_map_origin(Tape& t, Var v, const geom::Curvature& k) {
  Var nv = t.norm(v);
  if (t.value_scalar(nv) < geom::kNormFloor) return v;
  const double sqrt_c = std::sqrt(k.c);
  // lambda at the origin is 2, so the tanh argument reduces to sqrt(c)|v|.
  Var th = t.tanh(t.scale_const(nv, sqrt_c));
  Var out = t.scale(v, t.div(th, t.scale_const(nv, sqrt_c)));
  return project_to_norm(t, out, k.effective_radius());
}

Var clip_to_ball(Tape& t, Var x, double alpha, const geom::Curvature& k) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw UsageError("clip_to_ball: alpha must lie in [0, 1)");
  const double bound = k.ball_radius() * std::min(1.0 - alpha, 1.0 - k.max_norm_eps);
  return project_to_norm(t, x, bound);
}

}  // namespace hypball::ad
