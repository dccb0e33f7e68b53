#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hypball/errors.hpp"

namespace hypball::ad {

using Vec = std::vector<double>;

// Handle to a node on a Tape. Scalars are length-1 nodes.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over vector-valued nodes. One tape records one forward
// pass; creation order is the topological order, so backward() is a single
// reverse sweep. A tape is consumed by its backward pass and is confined to
// one thread.
class Tape {
 public:
  Tape() { nodes_.reserve(256); }

  // ---- leaves ----
  Var leaf(const Vec& value);
  Var leaf(std::span<const double> value);
  Var scalar(double value);

  // ---- elementwise / vector ops ----
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var neg(Var a);
  Var mul(Var a, Var b);  // elementwise
  Var div(Var a, Var b);  // elementwise
  Var add_const(Var a, double k);
  Var scale_const(Var a, double k);
  Var scale(Var v, Var s);  // vector * scalar node
  Var relu(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var tanh(Var a);
  Var atanh(Var a);
  Var asinh(Var a);
  Var sqrt(Var a);
  // Saturating clamp: value limited to [lo, hi], derivative zero outside.
  Var clamp(Var a, double lo, double hi);

  // ---- reductions / structure ----
  Var dot(Var a, Var b);
  Var sum(Var a);
  Var norm(Var a);  // Euclidean norm; backward guarded at 1e-15
  Var concat(Var a, Var b);
  // w is a row-major (rows x cols) matrix stored flat; x has length cols.
  Var matvec(Var w, Var x, int rows, int cols);

  // ---- access ----
  std::span<const double> value(Var v) const;
  double value_scalar(Var v) const;
  int length(Var v) const;

  // Reverse accumulation from a scalar loss into every leaf. A second call
  // on the same tape is a usage error.
  void backward(Var loss);
  std::span<const double> grad(Var v) const;
  double grad_scalar(Var v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kLeaf, kAdd, kSub, kNeg, kMul, kDiv, kAddConst, kScaleConst, kScale,
    kRelu, kExp, kLog, kTanh, kAtanh, kAsinh, kSqrt, kClamp,
    kDot, kSum, kNorm, kConcat, kMatVec,
  };

  struct Node {
    Op op;
    std::int32_t a = -1;
    std::int32_t b = -1;
    std::int32_t len = 0;
    std::size_t off = 0;
    double c0 = 0.0;  // clamp lo / scalar constant
    double c1 = 0.0;  // clamp hi
    std::int32_t rows = 0;
    std::int32_t cols = 0;
  };

  Var push(Op op, std::int32_t a, std::int32_t b, std::int32_t len);
  std::span<double> val_mut(std::int32_t id);
  std::span<const double> val(std::int32_t id) const;
  std::span<double> grd(std::int32_t id);
  void check_var(Var v, const char* what) const;

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<double> grads_;
  bool consumed_ = false;
};

// Central differences (f(x + h e_i) - f(x - h e_i)) / (2h) per coordinate.
// The verification oracle for every reverse-mode gradient in the toolkit.
Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x, double h);

}  // namespace hypball::ad
