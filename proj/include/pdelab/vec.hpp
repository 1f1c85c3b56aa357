#pragma once

// Small helpers over std::span<const double>. Dimensions here are tiny
// (d, k of order 1-10), so plain loops over contiguous storage are enough.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace pdelab {

using Vec = std::vector<double>;
using ConstSpan = std::span<const double>;

inline double squared_norm(ConstSpan v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double squared_distance(ConstSpan a, ConstSpan b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

/// ||a - scale * b||^2
inline double squared_distance_scaled(ConstSpan a, double scale, ConstSpan b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - scale * b[i];
    s += diff * diff;
  }
  return s;
}

inline double dot(ConstSpan a, ConstSpan b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Vec scaled(ConstSpan v, double s) {
  Vec out(v.begin(), v.end());
  for (double& x : out) x *= s;
  return out;
}

inline bool all_finite(ConstSpan v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// Thread-safe log-gamma (std::lgamma writes the global signgam).
inline double log_gamma(double x) { return boost::math::lgamma(x); }

/// log of the surface area of the unit sphere S^{dim-1} in R^dim.
inline double log_unit_sphere_area(int dim) {
  return std::log(2.0) + 0.5 * dim * std::log(std::numbers::pi) - log_gamma(0.5 * dim);
}

inline double log_sum_exp(ConstSpan values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double v : values) s += std::exp(v - hi);
  return hi + std::log(s);
}

/// Unit vector along the first axis scaled to the given norm.
inline Vec along_first_axis(int d, double norm) {
  Vec v(static_cast<std::size_t>(d), 0.0);
  v[0] = norm;
  return v;
}

}  // namespace pdelab
