#pragma once

#include <vector>

#include "hypball/vecmath.hpp"

namespace hypball::geom {

using vm::Vec;

// arctanh arguments are clamped below 1 - kAtanhMargin; divisions by a norm
// are guarded at kNormFloor. Both keep 64-bit evaluation finite at the
// removable singularities of the ball operations.
inline constexpr double kAtanhMargin = 1e-7;
inline constexpr double kNormFloor = 1e-15;
inline constexpr double kMobiusDenomFloor = 1e-15;

// Curvature magnitude c > 0 of the Poincare ball, plus the stability margin
// that defines the effective (usable) radius (1/sqrt(c)) * (1 - max_norm_eps).
struct Curvature {
  double c = 0.1;
  double max_norm_eps = 1e-3;

  Curvature() = default;
  Curvature(double c_, double max_norm_eps_ = 1e-3);

  double ball_radius() const;       // 1/sqrt(c)
  double effective_radius() const;  // ball_radius * (1 - max_norm_eps)

  bool operator==(const Curvature& o) const { return c == o.c && max_norm_eps == o.max_norm_eps; }
};

// A point strictly inside the curvature-c ball. Every constructing operation
// re-projects onto the effective radius, so the invariant
// |coords| <= (1/sqrt(c)) * (1 - max_norm_eps) always holds.
struct PoincarePoint {
  Vec coords;
  Curvature curvature;

  std::size_t dim() const { return coords.size(); }
};

// Element of the tangent space at some base point (carried separately).
struct TangentVector {
  Vec coords;
};

// Validates finiteness and projects onto the effective radius.
PoincarePoint make_point(Vec coords, const Curvature& k);

PoincarePoint origin(std::size_t dim, const Curvature& k);

// lambda_x^c = 2 / (1 - c|x|^2); >= 2 for any in-ball point.
double conformal_factor(const PoincarePoint& x);

// Gyrovector addition. Throws UsageError on curvature/dimension mismatch and
// DegenerateInputError when the denominator magnitude falls below 1e-15.
PoincarePoint mobius_add(const PoincarePoint& x, const PoincarePoint& y);

// (2/sqrt(c)) * arctanh(sqrt(c) * |(-x) (+) y|). The internal Moebius sum is
// evaluated without the stability projection so the arctanh clamp is the only
// truncation applied.
double hyp_distance(const PoincarePoint& x, const PoincarePoint& y);

// x (+) tanh(sqrt(c) * lambda_x |v| / 2) * v / (sqrt(c)|v|); |v| < 1e-15
// returns x unchanged.
PoincarePoint exp_map(const PoincarePoint& x, const TangentVector& v);

PoincarePoint exp_map_origin(const Vec& v, const Curvature& k);

// Inverse of exp at the origin: arctanh(sqrt(c)|y|) * y / (sqrt(c)|y|).
TangentVector log_map_origin(const PoincarePoint& y);

// Norm cap at (1/sqrt(c)) * (1 - alpha): identity below the bound, rescale to
// the bound above it. The effective bound is the tighter of alpha and the
// curvature's own stability margin.
PoincarePoint clip_to_ball(const Vec& raw, double alpha, const Curvature& k);

// Bare-vector kernels shared with the autodiff wrappers; no validation, no
// stability projection on the result.
namespace detail {
Vec mobius_add_raw(const Vec& x, const Vec& y, double c);
}

}  // namespace hypball::geom
