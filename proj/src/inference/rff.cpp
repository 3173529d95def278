#include <algorithm>
#include <cmath>

#include "granulab/core/error.hpp"
#include "granulab/core/rng.hpp"
#include "granulab/inference/inference.hpp"

namespace granulab::inference {

namespace {

constexpr std::uint64_t kOmegaSalt = 0x6f6d656761ULL;
constexpr std::uint64_t kPhaseSalt = 0x7068617365ULL;
constexpr double kTwoPi = 6.283185307179586;

// The median heuristic gets noisy rather than wrong on large sets, so cap
// the rows it sees with a deterministic stride.
constexpr std::size_t kHeuristicRowCap = 1024;

void check_lengthscales(const std::vector<double>& ls) {
  if (ls.empty()) throw ValidationError("lengthscales must be non-empty");
  for (double l : ls)
    if (!(l > 0.0) || !std::isfinite(l)) throw ValidationError("lengthscales must be positive");
}

}  // namespace

double matern25(const std::vector<double>& x, const std::vector<double>& y,
                const std::vector<double>& lengthscales) {
  check_lengthscales(lengthscales);
  if (x.size() != lengthscales.size() || y.size() != lengthscales.size())
    throw ValidationError("matern25: dimension mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double t = (x[i] - y[i]) / lengthscales[i];
    d2 += t * t;
  }
  double d = std::sqrt(d2);
  double a = std::sqrt(5.0) * d;
  return (1.0 + a + 5.0 * d2 / 3.0) * std::exp(-a);
}

void RffConfig::validate() const {
  if (feature_count == 0) throw ValidationError("rff: feature_count must be positive");
  if (smoothness != 2.5) throw ValidationError("rff: smoothness is fixed at 2.5");
  check_lengthscales(lengthscales);
  if (omega.size() != feature_count || phase.size() != feature_count)
    throw ValidationError("rff: omega and phase must have feature_count rows");
  for (const auto& row : omega)
    if (row.size() != lengthscales.size()) throw ValidationError("rff: omega row width mismatch");
}

RffConfig make_rff(std::size_t feature_count, const std::vector<double>& lengthscales,
                   std::uint64_t seed) {
  if (feature_count == 0) throw ValidationError("make_rff: feature_count must be positive");
  check_lengthscales(lengthscales);

  RffConfig rff;
  rff.feature_count = feature_count;
  rff.lengthscales = lengthscales;
  rff.seed = seed;
  rff.omega.assign(feature_count, std::vector<double>(lengthscales.size()));
  rff.phase.resize(feature_count);

  // Matern-2.5 spectral draw: one Gamma(nu, 1/nu) mixing variable per row
  // makes the row a 5-dof multivariate t.
  Rng omega_rng(mix_seed(seed, kOmegaSalt));
  for (auto& row : rff.omega) {
    for (double& w : row) w = omega_rng.normal();
    double g = omega_rng.gamma(2.5, 1.0 / 2.5);
    double inv_sqrt_g = 1.0 / std::sqrt(g);
    for (std::size_t d = 0; d < row.size(); ++d) row[d] *= inv_sqrt_g / lengthscales[d];
  }
  Rng phase_rng(mix_seed(seed, kPhaseSalt));
  for (double& b : rff.phase) b = phase_rng.uniform(0.0, kTwoPi);
  return rff;
}

std::vector<double> rff_features(const std::vector<double>& stats, const RffConfig& rff) {
  rff.validate();
  if (stats.size() != rff.stat_dim())
    throw ValidationError("rff_features: statistic vector length mismatch");
  std::vector<double> phi(rff.feature_count);
  double scale = std::sqrt(2.0 / static_cast<double>(rff.feature_count));
  for (std::size_t i = 0; i < rff.feature_count; ++i) {
    double arg = rff.phase[i];
    const auto& row = rff.omega[i];
    for (std::size_t d = 0; d < stats.size(); ++d) arg += row[d] * stats[d];
    phi[i] = scale * std::cos(arg);
  }
  return phi;
}

std::vector<double> median_lengthscales(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw ValidationError("median_lengthscales: need at least 2 rows");
  std::size_t dim = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != dim) throw ValidationError("median_lengthscales: ragged rows");

  std::size_t stride = (rows.size() + kHeuristicRowCap - 1) / kHeuristicRowCap;
  std::vector<const std::vector<double>*> sel;
  for (std::size_t i = 0; i < rows.size(); i += stride) sel.push_back(&rows[i]);

  std::vector<double> ls(dim);
  std::vector<double> gaps;
  gaps.reserve(sel.size() * (sel.size() - 1) / 2);
  for (std::size_t d = 0; d < dim; ++d) {
    gaps.clear();
    for (std::size_t i = 0; i < sel.size(); ++i)
      for (std::size_t j = i + 1; j < sel.size(); ++j)
        gaps.push_back(std::fabs((*sel[i])[d] - (*sel[j])[d]));
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    double med = gaps[gaps.size() / 2];
    ls[d] = med > 1e-12 ? med : 1.0;
  }
  return ls;
}

}  // namespace granulab::inference
