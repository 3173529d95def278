#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "granulab/core/error.hpp"
#include "granulab/core/parallel.hpp"
#include "granulab/core/rng.hpp"
#include "granulab/features/features.hpp"

namespace granulab::features {

namespace {

constexpr std::size_t kPairCap = 4096;
constexpr std::uint64_t kSubsampleSeed = 0x64636f72;  // fixed for reproducibility

// Caps aligned pairs at kPairCap by a seeded partial shuffle, so repeated
// calls on the same data always see the same subsample.
void subsample_pairs(std::vector<double>& x, std::vector<double>& y) {
  if (x.size() <= kPairCap) return;
  Rng rng(kSubsampleSeed);
  std::vector<std::size_t> idx(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < kPairCap; ++i)
    std::swap(idx[i], idx[i + rng.uniform_index(idx.size() - i)]);
  std::vector<double> xs(kPairCap), ys(kPairCap);
  for (std::size_t i = 0; i < kPairCap; ++i) {
    xs[i] = x[idx[i]];
    ys[i] = y[idx[i]];
  }
  x = std::move(xs);
  y = std::move(ys);
}

void check_args(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw ValidationError("distance correlation needs equal-length inputs");
}

}  // namespace

double distance_correlation(const std::vector<double>& x_in,
                            const std::vector<double>& y_in) {
  check_args(x_in, y_in);
  std::vector<double> x = x_in, y = y_in;
  subsample_pairs(x, y);
  std::size_t m = x.size();
  if (m < 2) return 0.0;
  double inv_m = 1.0 / static_cast<double>(m);

  std::vector<double> ax(m), ay(m);
  parallel_for(m, [&](std::size_t j) {
    double sx = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      sx += std::abs(x[j] - x[k]);
      sy += std::abs(y[j] - y[k]);
    }
    ax[j] = sx * inv_m;
    ay[j] = sy * inv_m;
  });
  double gx = 0.0, gy = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    gx += ax[j];
    gy += ay[j];
  }
  gx *= inv_m;
  gy *= inv_m;

  // Per-row partials first, summed serially, so the result does not depend
  // on the thread count.
  std::vector<double> pxy(m), pxx(m), pyy(m);
  parallel_for(m, [&](std::size_t j) {
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      double a = std::abs(x[j] - x[k]) - ax[j] - ax[k] + gx;
      double b = std::abs(y[j] - y[k]) - ay[j] - ay[k] + gy;
      sxy += a * b;
      sxx += a * a;
      syy += b * b;
    }
    pxy[j] = sxy;
    pxx[j] = sxx;
    pyy[j] = syy;
  });
  double cov2 = 0.0, varx2 = 0.0, vary2 = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    cov2 += pxy[j];
    varx2 += pxx[j];
    vary2 += pyy[j];
  }
  cov2 *= inv_m * inv_m;
  varx2 *= inv_m * inv_m;
  vary2 *= inv_m * inv_m;

  double denom = std::sqrt(varx2 * vary2);
  if (!(denom > 0.0)) return 0.0;
  double d2 = cov2 / denom;
  if (!(d2 > 0.0)) return 0.0;
  return std::min(1.0, std::sqrt(d2));
}

double distance_correlation_reference(const std::vector<double>& x_in,
                                      const std::vector<double>& y_in) {
  check_args(x_in, y_in);
  std::vector<double> x = x_in, y = y_in;
  subsample_pairs(x, y);
  std::size_t m = x.size();
  if (m < 2) return 0.0;
  double inv_m = 1.0 / static_cast<double>(m);

  auto centered = [&](const std::vector<double>& v) {
    std::vector<double> d(m * m);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) d[j * m + k] = std::abs(v[j] - v[k]);
    std::vector<double> row(m, 0.0);
    double grand = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < m; ++k) row[j] += d[j * m + k];
      grand += row[j];
      row[j] *= inv_m;
    }
    grand *= inv_m * inv_m;
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) d[j * m + k] += grand - row[j] - row[k];
    return d;
  };
  std::vector<double> a = centered(x);
  std::vector<double> b = centered(y);
  double cov2 = 0.0, varx2 = 0.0, vary2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov2 += a[i] * b[i];
    varx2 += a[i] * a[i];
    vary2 += b[i] * b[i];
  }
  cov2 *= inv_m * inv_m;
  varx2 *= inv_m * inv_m;
  vary2 *= inv_m * inv_m;
  double denom = std::sqrt(varx2 * vary2);
  if (!(denom > 0.0)) return 0.0;
  double d2 = cov2 / denom;
  if (!(d2 > 0.0)) return 0.0;
  return std::min(1.0, std::sqrt(d2));
}

}  // namespace granulab::features
