#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hypball/errors.hpp"

namespace hypball::vm {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_sq(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm_sq(a)); }

inline Vec scaled(const Vec& a, double k) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = k * a[i];
  return out;
}

inline Vec add(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline Vec sub(const Vec& a, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline Vec neg(const Vec& a) { return scaled(a, -1.0); }

// out = ka*a + kb*b
inline Vec lincomb(double ka, const Vec& a, double kb, const Vec& b) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = ka * a[i] + kb * b[i];
  return out;
}

inline bool all_finite(const Vec& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline void require_finite(const Vec& a, const char* what) {
  if (!all_finite(a)) throw DomainError(std::string(what) + ": non-finite entry");
}

inline void require_same_size(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) throw UsageError(std::string(what) + ": dimension mismatch");
}

}  // namespace hypball::vm
