#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "ftf/errors.hpp"
#include "ftf/sparse.hpp"

namespace ftf {

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// sign(x_i) * max(|x_i| - t, 0), elementwise.
inline Vector soft_threshold(std::span<const double> x, double t) {
  if (!(t >= 0.0)) throw ConstructionError("soft_threshold: threshold must be >= 0");
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = soft_threshold(x[i], t);
  return out;
}

// Proximal map of t * max(a, 0): only positive values are shrunk.
inline double positive_part_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x >= 0.0) return 0.0;
  return x;
}

inline double positive_part_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::max(v, 0.0);
  return s;
}

inline double l1_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

}  // namespace ftf
