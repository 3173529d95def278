#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "granulab/core/nelder_mead.hpp"
#include "granulab/core/stats_util.hpp"
#include "granulab/features/features.hpp"

namespace granulab::features {

namespace {

constexpr double kDfMin = 0.5;
constexpr double kDfMax = 50.0;
constexpr double kScaleMin = 1e-9;
constexpr std::size_t kMinPoints = 16;

// Mean of a standard chi variable with df degrees of freedom.
double chi_mean(double df) {
  return std::sqrt(2.0) * std::exp(std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df));
}

double chi_nll(const std::vector<double>& r, double df, double b, double A) {
  if (df < kDfMin || df > kDfMax || !(A > 0.0))
    return std::numeric_limits<double>::infinity();
  double log_norm = (0.5 * df - 1.0) * std::log(2.0) + std::lgamma(0.5 * df);
  double log_a = std::log(A);
  double nll = 0.0;
  for (double x : r) {
    double t = (x - b) / A;
    if (!(t > 0.0)) return std::numeric_limits<double>::infinity();
    nll -= (df - 1.0) * std::log(t) - 0.5 * t * t - log_norm - log_a;
  }
  return nll;
}

ChiFit degenerate_fit(double b) {
  ChiFit fit;
  fit.df = kDfMin;
  fit.b = b;
  fit.A = kScaleMin;
  fit.nll = std::numeric_limits<double>::infinity();
  fit.degenerate = true;
  return fit;
}

}  // namespace

ChiFit fit_chi(const std::vector<double>& r) {
  if (r.size() < kMinPoints) return degenerate_fit(r.empty() ? 0.0 : min_of(r));
  double lo = min_of(r);
  double hi = max_of(r);
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) return degenerate_fit(lo);

  double mu = mean_of(r);
  double sd = stddev_pop(r);

  // Moment start: with the shift pinned just under the smallest sample,
  // (mean - b)^2 / var depends on df alone and increases with it.
  double b0 = lo - std::max(1e-6, 0.05 * (mu - lo));
  double rho = (mu - b0) * (mu - b0) / (sd * sd);
  auto rho_of = [](double df) {
    double m1 = chi_mean(df);
    return m1 * m1 / (df - m1 * m1);
  };
  double df0;
  if (rho <= rho_of(kDfMin)) {
    df0 = kDfMin;
  } else if (rho >= rho_of(kDfMax)) {
    df0 = kDfMax;
  } else {
    double a = kDfMin, c = kDfMax;
    for (int i = 0; i < 80; ++i) {
      double m = 0.5 * (a + c);
      (rho_of(m) < rho ? a : c) = m;
    }
    df0 = 0.5 * (a + c);
  }
  double a0 = (mu - b0) / chi_mean(df0);

  auto objective = [&](const std::vector<double>& p) {
    return chi_nll(r, p[0], p[1], p[2]);
  };
  double init_nll = chi_nll(r, df0, b0, a0);
  NelderMeadOptions opt;
  opt.max_evaluations = 3000;
  NelderMeadResult best = nelder_mead(
      objective, {df0, b0, a0},
      {std::max(0.25, 0.2 * df0), 0.49 * (lo - b0), 0.3 * a0}, opt);

  // Fresh-simplex restarts from the incumbent untangle the nearly flat
  // shift direction; stop once a round no longer helps.
  for (int round = 0; round < 2 && std::isfinite(best.fval); ++round) {
    double prev = best.fval;
    NelderMeadResult next = nelder_mead(
        objective, best.x,
        {std::max(0.05, 0.05 * best.x[0]), 0.2 * (lo - best.x[1]),
         0.1 * best.x[2]},
        opt);
    if (next.fval < best.fval) best = next;
    if (prev - best.fval < 1e-9 * (1.0 + std::abs(prev))) break;
  }

  ChiFit fit;
  if (best.fval <= init_nll) {
    fit.df = std::clamp(best.x[0], kDfMin, kDfMax);
    fit.b = best.x[1];
    fit.A = std::max(best.x[2], kScaleMin);
    fit.nll = best.fval;
  } else {
    fit.df = df0;
    fit.b = b0;
    fit.A = a0;
    fit.nll = init_nll;
  }
  return fit;
}

}  // namespace granulab::features
