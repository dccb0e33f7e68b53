#include "hypball/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace hypball::geom {

Curvature::Curvature(double c_, double max_norm_eps_) : c(c_), max_norm_eps(max_norm_eps_) {
  if (!(c > 0.0) || !std::isfinite(c)) throw UsageError("Curvature: c must be positive and finite");
  if (!(max_norm_eps > 0.0 && max_norm_eps < 1.0))
    throw UsageError("Curvature: max_norm_eps must lie in (0, 1)");
}

double Curvature::ball_radius() const { return 1.0 / std::sqrt(c); }
double Curvature::effective_radius() const { return ball_radius() * (1.0 - max_norm_eps); }

namespace {

// Rescale onto the effective radius when rounding (or a caller) pushed the
// point past it.
Vec project_to_effective(Vec coords, const Curvature& k) {
  const double n = vm::norm(coords);
  const double bound = k.effective_radius();
  if (n > bound) {
    const double s = bound / n;
    for (auto& v : coords) v *= s;
  }
  return coords;
}

void require_compatible(const PoincarePoint& x, const PoincarePoint& y, const char* what) {
  if (x.dim() != y.dim()) throw UsageError(std::string(what) + ": dimension mismatch");
  if (!(x.curvature == y.curvature)) throw UsageError(std::string(what) + ": curvature mismatch");
}

}  // namespace

PoincarePoint make_point(Vec coords, const Curvature& k) {
  vm::require_finite(coords, "make_point");
  return PoincarePoint{project_to_effective(std::move(coords), k), k};
}

PoincarePoint origin(std::size_t dim, const Curvature& k) {
  return PoincarePoint{Vec(dim, 0.0), k};
}

double conformal_factor(const PoincarePoint& x) {
  vm::require_finite(x.coords, "conformal_factor");
  return 2.0 / (1.0 - x.curvature.c * vm::norm_sq(x.coords));
}

namespace detail {

Vec mobius_add_raw(const Vec& x, const Vec& y, double c) {
  const double xy = vm::dot(x, y);
  const double x2 = vm::norm_sq(x);
  const double y2 = vm::norm_sq(y);
  const double den = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
  if (std::abs(den) < kMobiusDenomFloor)
    throw DegenerateInputError("mobius_add: denominator below 1e-15");
  const double ax = (1.0 + 2.0 * c * xy + c * y2) / den;
  const double ay = (1.0 - c * x2) / den;
  return vm::lincomb(ax, x, ay, y);
}

}  // namespace detail

PoincarePoint mobius_add(const PoincarePoint& x, const PoincarePoint& y) {
  require_compatible(x, y, "mobius_add");
  Vec out = detail::mobius_add_raw(x.coords, y.coords, x.curvature.c);
  return PoincarePoint{project_to_effective(std::move(out), x.curvature), x.curvature};
}

double hyp_distance(const PoincarePoint& x, const PoincarePoint& y) {
  require_compatible(x, y, "hyp_distance");
  const double c = x.curvature.c;
  const Vec diff = detail::mobius_add_raw(vm::neg(x.coords), y.coords, c);
  const double sqrt_c = std::sqrt(c);
  const double arg = std::clamp(sqrt_c * vm::norm(diff), 0.0, 1.0 - kAtanhMargin);
  return 2.0 / sqrt_c * std::atanh(arg);
}

PoincarePoint exp_map(const PoincarePoint& x, const TangentVector& v) {
  vm::require_finite(v.coords, "exp_map");
  if (v.coords.size() != x.dim()) throw UsageError("exp_map: tangent dimension mismatch");
  const double nv = vm::norm(v.coords);
  if (nv < kNormFloor) return x;
  const double c = x.curvature.c;
  const double sqrt_c = std::sqrt(c);
  const double lam = conformal_factor(x);
  const double t = std::tanh(sqrt_c * lam * nv / 2.0);
  const Vec step = vm::scaled(v.coords, t / (sqrt_c * nv));
  Vec out = detail::mobius_add_raw(x.coords, step, c);
  return PoincarePoint{project_to_effective(std::move(out), x.curvature), x.curvature};
}

PoincarePoint exp_map_origin(const Vec& v, const Curvature& k) {
  return exp_map(origin(v.size(), k), TangentVector{v});
}

TangentVector log_map_origin(const PoincarePoint& y) {
  const double ny = vm::norm(y.coords);
  if (ny < kNormFloor) return TangentVector{Vec(y.dim(), 0.0)};
  const double sqrt_c = std::sqrt(y.curvature.c);
  const double arg = std::clamp(sqrt_c * ny, 0.0, 1.0 - kAtanhMargin);
  return TangentVector{vm::scaled(y.coords, std::atanh(arg) / (sqrt_c * ny))};
}

PoincarePoint clip_to_ball(const Vec& raw, double alpha, const Curvature& k) {
  vm::require_finite(raw, "clip_to_ball");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw UsageError("clip_to_ball: alpha must lie in [0, 1)");
  const double bound =
      k.ball_radius() * std::min(1.0 - alpha, 1.0 - k.max_norm_eps);
  const double n = vm::norm(raw);
  Vec out = raw;
  if (n > bound) {
    const double s = bound / n;
    for (auto& v : out) v *= s;
  }
  return PoincarePoint{std::move(out), k};
}

}  // namespace hypball::geom
