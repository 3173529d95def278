#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "granulab/core/error.hpp"

namespace granulab {

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw ValidationError("mean_of: empty input");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population standard deviation (divide by n, not n-1).
inline double stddev_pop(const std::vector<double>& v) {
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// Linear-interpolation quantile (the common "type 7" definition) on data
// that is already sorted ascending. p in [0, 1].
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw ValidationError("quantile_sorted: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile_sorted: p outside [0,1]");
  double h = p * (static_cast<double>(sorted.size()) - 1.0);
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double quantile_of(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, p);
}

inline double iqr_sorted(const std::vector<double>& sorted) {
  return quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
}

// Raw kurtosis m4 / m2^2 (normal gives 3). Returns 0 for constant data.
inline double kurtosis_of(const std::vector<double>& v) {
  double m = mean_of(v);
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    double d = x - m;
    double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  double n = static_cast<double>(v.size());
  m2 /= n;
  m4 /= n;
  if (m2 <= 1e-300) return 0.0;
  return m4 / (m2 * m2);
}

inline double max_of(const std::vector<double>& v) {
  if (v.empty()) throw ValidationError("max_of: empty input");
  return *std::max_element(v.begin(), v.end());
}

inline double min_of(const std::vector<double>& v) {
  if (v.empty()) throw ValidationError("min_of: empty input");
  return *std::min_element(v.begin(), v.end());
}

}  // namespace granulab
