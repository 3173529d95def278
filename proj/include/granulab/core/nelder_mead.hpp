#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace granulab {

struct NelderMeadResult {
  std::vector<double> x;
  double fval = 0.0;
  int evaluations = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  int max_evaluations = 4000;
  double f_tolerance = 1e-10;
  double x_tolerance = 1e-10;
};

// Plain downhill simplex with adaptive-ish standard coefficients.
// `step` gives the initial simplex edge per dimension.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, const std::vector<double>& step,
                                    const NelderMeadOptions& opt = {}) {
  const std::size_t n = x0.size();
  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

  NelderMeadResult res;
  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];
  for (std::size_t i = 0; i <= n; ++i) fv[i] = f(pts[i]);
  res.evaluations = static_cast<int>(n + 1);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);

  while (res.evaluations < opt.max_evaluations) {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::size_t best = order[0], worst = order[n], second = order[n - 1];

    double spread = std::fabs(fv[worst] - fv[best]);
    double xspread = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      xspread = std::max(xspread, std::fabs(pts[worst][j] - pts[best][j]));
    if (spread < opt.f_tolerance && xspread < opt.x_tolerance) {
      res.converged = true;
      break;
    }

    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i <= n; ++i)
        if (i != worst) s += pts[i][j];
      centroid[j] = s / static_cast<double>(n);
    }

    for (std::size_t j = 0; j < n; ++j) xr[j] = centroid[j] + alpha * (centroid[j] - pts[worst][j]);
    double fr = f(xr);
    ++res.evaluations;

    if (fr < fv[best]) {
      for (std::size_t j = 0; j < n; ++j) xe[j] = centroid[j] + gamma * (xr[j] - centroid[j]);
      double fe = f(xe);
      ++res.evaluations;
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      pts[worst] = xr;
      fv[worst] = fr;
    } else {
      bool outside = fr < fv[worst];
      const std::vector<double>& toward = outside ? xr : pts[worst];
      for (std::size_t j = 0; j < n; ++j) xc[j] = centroid[j] + rho * (toward[j] - centroid[j]);
      double fc = f(xc);
      ++res.evaluations;
      if (fc < (outside ? fr : fv[worst])) {
        pts[worst] = xc;
        fv[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t j = 0; j < n; ++j)
            pts[i][j] = pts[best][j] + sigma * (pts[i][j] - pts[best][j]);
          fv[i] = f(pts[i]);
          ++res.evaluations;
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (fv[i] < fv[best]) best = i;
  res.x = pts[best];
  res.fval = fv[best];
  return res;
}

}  // namespace granulab
