#include "hypball/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace hypball::ad {

namespace {
constexpr double kNormFloor = 1e-15;
}

Var Tape::push(Op op, std::int32_t a, std::int32_t b, std::int32_t len) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.len = len;
  n.off = values_.size();
  nodes_.push_back(n);
  values_.resize(values_.size() + static_cast<std::size_t>(len));
  return Var{static_cast<std::int32_t>(nodes_.size()) - 1};
}

std::span<double> Tape::val_mut(std::int32_t id) {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return {values_.data() + n.off, static_cast<std::size_t>(n.len)};
}

std::span<const double> Tape::val(std::int32_t id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return {values_.data() + n.off, static_cast<std::size_t>(n.len)};
}

std::span<double> Tape::grd(std::int32_t id) {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return {grads_.data() + n.off, static_cast<std::size_t>(n.len)};
}

void Tape::check_var(Var v, const char* what) const {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw UsageError(std::string(what) + ": variable does not belong to this tape");
}

Var Tape::leaf(const Vec& value) { return leaf(std::span<const double>(value)); }

Var Tape::leaf(std::span<const double> value) {
  Var v = push(Op::kLeaf, -1, -1, static_cast<std::int32_t>(value.size()));
  std::copy(value.begin(), value.end(), val_mut(v.id).begin());
  return v;
}

Var Tape::scalar(double value) {
  Var v = push(Op::kLeaf, -1, -1, 1);
  val_mut(v.id)[0] = value;
  return v;
}

namespace {
void require_same_len(int la, int lb, const char* what) {
  if (la != lb) throw UsageError(std::string(what) + ": operand length mismatch");
}
}  // namespace

Var Tape::add(Var a, Var b) {
  check_var(a, "add");
  check_var(b, "add");
  require_same_len(length(a), length(b), "add");
  Var out = push(Op::kAdd, a.id, b.id, length(a));
  auto va = val(a.id), vb = val(b.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] + vb[i];
  return out;
}

Var Tape::sub(Var a, Var b) {
  check_var(a, "sub");
  check_var(b, "sub");
  require_same_len(length(a), length(b), "sub");
  Var out = push(Op::kSub, a.id, b.id, length(a));
  auto va = val(a.id), vb = val(b.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] - vb[i];
  return out;
}

Var Tape::neg(Var a) {
  check_var(a, "neg");
  Var out = push(Op::kNeg, a.id, -1, length(a));
  auto va = val(a.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = -va[i];
  return out;
}

Var Tape::mul(Var a, Var b) {
  check_var(a, "mul");
  check_var(b, "mul");
  require_same_len(length(a), length(b), "mul");
  Var out = push(Op::kMul, a.id, b.id, length(a));
  auto va = val(a.id), vb = val(b.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] * vb[i];
  return out;
}

Var Tape::div(Var a, Var b) {
  check_var(a, "div");
  check_var(b, "div");
  require_same_len(length(a), length(b), "div");
  Var out = push(Op::kDiv, a.id, b.id, length(a));
  auto va = val(a.id), vb = val(b.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] / vb[i];
  return out;
}

Var Tape::add_const(Var a, double k) {
  check_var(a, "add_const");
  Var out = push(Op::kAddConst, a.id, -1, length(a));
  nodes_.back().c0 = k;
  auto va = val(a.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] + k;
  return out;
}

Var Tape::scale_const(Var a, double k) {
  check_var(a, "scale_const");
  Var out = push(Op::kScaleConst, a.id, -1, length(a));
  nodes_.back().c0 = k;
  auto va = val(a.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] * k;
  return out;
}

Var Tape::scale(Var v, Var s) {
  check_var(v, "scale");
  check_var(s, "scale");
  if (length(s) != 1) throw UsageError("scale: scale factor must be scalar");
  Var out = push(Op::kScale, v.id, s.id, length(v));
  auto vv = val(v.id);
  const double k = val(s.id)[0];
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = vv[i] * k;
  return out;
}

Var Tape::relu(Var a) {
  check_var(a, "relu");
  Var out = push(Op::kRelu, a.id, -1, length(a));
  auto va = val(a.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] > 0.0 ? va[i] : 0.0;
  return out;
}

Var Tape::exp(Var a) {
  check_var(a, "exp");
  Var out = push(Op::kExp, a.id, -1, length(a));
  auto va = val(a.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = std::exp(va[i]);
  return out;
}

Var Tape::log(Var a) {
  check_var(a, "log");
  Var out = push(Op::kLog, a.id, -1, length(a));
  auto va = val(a.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = std::log(va[i]);
  return out;
}

Var Tape::tanh(Var a) {
  check_var(a, "tanh");
  Var out = push(Op::kTanh, a.id, -1, length(a));
  auto va = val(a.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = std::tanh(va[i]);
  return out;
}

Var Tape::atanh(Var a) {
  check_var(a, "atanh");
  Var out = push(Op::kAtanh, a.id, -1, length(a));
  auto va = val(a.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = std::atanh(va[i]);
  return out;
}

Var Tape::asinh(Var a) {
  check_var(a, "asinh");
  Var out = push(Op::kAsinh, a.id, -1, length(a));
  auto va = val(a.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = std::asinh(va[i]);
  return out;
}

Var Tape::sqrt(Var a) {
  check_var(a, "sqrt");
  Var out = push(Op::kSqrt, a.id, -1, length(a));
  auto va = val(a.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = std::sqrt(va[i]);
  return out;
}

Var Tape::clamp(Var a, double lo, double hi) {
  check_var(a, "clamp");
  Var out = push(Op::kClamp, a.id, -1, length(a));
  nodes_.back().c0 = lo;
  nodes_.back().c1 = hi;
  auto va = val(a.id);
  auto vo = val_mut(out.id);
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = std::clamp(va[i], lo, hi);
  return out;
}

Var Tape::dot(Var a, Var b) {
  check_var(a, "dot");
  check_var(b, "dot");
  require_same_len(length(a), length(b), "dot");
  Var out = push(Op::kDot, a.id, b.id, 1);
  auto va = val(a.id), vb = val(b.id);
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
  val_mut(out.id)[0] = s;
  return out;
}

Var Tape::sum(Var a) {
  check_var(a, "sum");
  Var out = push(Op::kSum, a.id, -1, 1);
  auto va = val(a.id);
  double s = 0.0;
  for (double x : va) s += x;
  val_mut(out.id)[0] = s;
  return out;
}

Var Tape::norm(Var a) {
  check_var(a, "norm");
  Var out = push(Op::kNorm, a.id, -1, 1);
  auto va = val(a.id);
  double s = 0.0;
  for (double x : va) s += x * x;
  val_mut(out.id)[0] = std::sqrt(s);
  return out;
}

Var Tape::concat(Var a, Var b) {
  check_var(a, "concat");
  check_var(b, "concat");
  Var out = push(Op::kConcat, a.id, b.id, length(a) + length(b));
  auto va = val(a.id), vb = val(b.id);
  auto vo = val_mut(out.id);
  std::copy(va.begin(), va.end(), vo.begin());
  std::copy(vb.begin(), vb.end(), vo.begin() + va.size());
  return out;
}

Var Tape::matvec(Var w, Var x, int rows, int cols) {
  check_var(w, "matvec");
  check_var(x, "matvec");
  if (length(w) != rows * cols) throw UsageError("matvec: weight length != rows*cols");
  if (length(x) != cols) throw UsageError("matvec: input length != cols");
  Var out = push(Op::kMatVec, w.id, x.id, rows);
  nodes_.back().rows = rows;
  nodes_.back().cols = cols;
  auto vw = val(w.id), vx = val(x.id);
  auto vo = val_mut(out.id);
  for (int i = 0; i < rows; ++i) {
    double s = 0.0;
    const double* row = vw.data() + static_cast<std::size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) s += row[j] * vx[j];
    vo[i] = s;
  }
  return out;
}

std::span<const double> Tape::value(Var v) const {
  check_var(v, "value");
  return val(v.id);
}

double Tape::value_scalar(Var v) const {
  check_var(v, "value_scalar");
  if (nodes_[static_cast<std::size_t>(v.id)].len != 1)
    throw UsageError("value_scalar: node is not scalar");
  return val(v.id)[0];
}

int Tape::length(Var v) const {
  check_var(v, "length");
  return nodes_[static_cast<std::size_t>(v.id)].len;
}

void Tape::backward(Var loss) {
  check_var(loss, "backward");
  if (consumed_) throw UsageError("backward: tape already consumed");
  if (length(loss) != 1) throw UsageError("backward: loss must be scalar");
  consumed_ = true;
  grads_.assign(values_.size(), 0.0);
  grd(loss.id)[0] = 1.0;

  for (std::int32_t id = static_cast<std::int32_t>(nodes_.size()) - 1; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.op == Op::kLeaf) continue;
    auto g = grd(id);
    auto va = val(n.a);
    auto ga = grd(n.a);
    switch (n.op) {
      case Op::kAdd: {
        auto gb = grd(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::kSub: {
        auto gb = grd(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] -= g[i];
        }
        break;
      }
      case Op::kNeg:
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
        break;
      case Op::kMul: {
        auto vb = val(n.b);
        auto gb = grd(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * vb[i];
          gb[i] += g[i] * va[i];
        }
        break;
      }
      case Op::kDiv: {
        auto vb = val(n.b);
        auto gb = grd(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] / vb[i];
          gb[i] -= g[i] * va[i] / (vb[i] * vb[i]);
        }
        break;
      }
      case Op::kAddConst:
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        break;
      case Op::kScaleConst:
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.c0;
        break;
      case Op::kScale: {
        const double k = val(n.b)[0];
        auto gb = grd(n.b);
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * k;
          acc += g[i] * va[i];
        }
        gb[0] += acc;
        break;
      }
      case Op::kRelu:
        for (std::size_t i = 0; i < g.size(); ++i)
          if (va[i] > 0.0) ga[i] += g[i];
        break;
      case Op::kExp: {
        auto vo = val(id);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vo[i];
        break;
      }
      case Op::kLog:
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / va[i];
        break;
      case Op::kTanh: {
        auto vo = val(id);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - vo[i] * vo[i]);
        break;
      }
      case Op::kAtanh:
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / (1.0 - va[i] * va[i]);
        break;
      case Op::kAsinh:
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / std::sqrt(1.0 + va[i] * va[i]);
        break;
      case Op::kSqrt: {
        auto vo = val(id);
        for (std::size_t i = 0; i < g.size(); ++i)
          ga[i] += g[i] * 0.5 / std::max(vo[i], kNormFloor);
        break;
      }
      case Op::kClamp:
        for (std::size_t i = 0; i < g.size(); ++i)
          if (va[i] >= n.c0 && va[i] <= n.c1) ga[i] += g[i];
        break;
      case Op::kDot: {
        auto vb = val(n.b);
        auto gb = grd(n.b);
        const double g0 = g[0];
        for (std::size_t i = 0; i < va.size(); ++i) {
          ga[i] += g0 * vb[i];
          gb[i] += g0 * va[i];
        }
        break;
      }
      case Op::kSum: {
        const double g0 = g[0];
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g0;
        break;
      }
      case Op::kNorm: {
        const double g0 = g[0];
        const double nv = std::max(val(id)[0], kNormFloor);
        for (std::size_t i = 0; i < va.size(); ++i) ga[i] += g0 * va[i] / nv;
        break;
      }
      case Op::kConcat: {
        auto gb = grd(n.b);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[ga.size() + i];
        break;
      }
      case Op::kMatVec: {
        auto vx = val(n.b);
        auto gx = grd(n.b);
        const int rows = n.rows, cols = n.cols;
        for (int i = 0; i < rows; ++i) {
          const double gi = g[static_cast<std::size_t>(i)];
          if (gi == 0.0) continue;
          const double* wrow = va.data() + static_cast<std::size_t>(i) * cols;
          double* garow = ga.data() + static_cast<std::size_t>(i) * cols;
          for (int j = 0; j < cols; ++j) {
            garow[j] += gi * vx[j];
            gx[j] += gi * wrow[j];
          }
        }
        break;
      }
      case Op::kLeaf:
        break;
    }
  }
}

std::span<const double> Tape::grad(Var v) const {
  check_var(v, "grad");
  if (!consumed_) throw UsageError("grad: backward has not run");
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  return {grads_.data() + n.off, static_cast<std::size_t>(n.len)};
}

double Tape::grad_scalar(Var v) const {
  auto g = grad(v);
  if (g.size() != 1) throw UsageError("grad_scalar: node is not scalar");
  return g[0];
}

Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec grad(x.size());
  Vec probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw DomainError("finite_diff_grad: non-finite function evaluation");
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace hypball::ad
