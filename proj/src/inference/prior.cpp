#include <cmath>

#include "granulab/core/error.hpp"
#include "granulab/core/rng.hpp"
#include "granulab/inference/inference.hpp"

namespace granulab::inference {

namespace {
constexpr std::uint64_t kPriorSalt = 0x7072696f72ULL;
}

void Prior::validate() const {
  if (lo.empty()) throw ValidationError("prior: no dimensions");
  if (hi.size() != lo.size() || names.size() != lo.size())
    throw ValidationError("prior: names, lo, hi must have equal length");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || lo[i] > hi[i])
      throw ValidationError("prior: range for " + names[i] + " is invalid");
  }
}

bool Prior::contains(const std::vector<double>& theta) const {
  if (theta.size() != lo.size()) return false;
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (theta[i] < lo[i] || theta[i] > hi[i]) return false;
  return true;
}

Prior granular_prior() {
  Prior p;
  p.names = {"mu_s", "ln_mu_r", "e"};
  p.lo = {0.01, std::log(1e-7), 0.0};
  p.hi = {1.0, std::log(1e-1), 1.0};
  return p;
}

std::vector<std::vector<double>> sample_prior(const Prior& prior, std::size_t count,
                                              std::uint64_t seed) {
  prior.validate();
  Rng rng(mix_seed(seed, kPriorSalt));
  std::vector<std::vector<double>> draws(count, std::vector<double>(prior.dim()));
  for (auto& row : draws)
    for (std::size_t d = 0; d < prior.dim(); ++d) row[d] = rng.uniform(prior.lo[d], prior.hi[d]);
  return draws;
}

std::vector<double> to_inference_coords(const sim::GrainParams& p) {
  if (!(p.mu_r > 0.0)) throw ValidationError("to_inference_coords: mu_r must be positive");
  return {p.mu_s, std::log(p.mu_r), p.e};
}

sim::GrainParams to_grain_params(const std::vector<double>& theta) {
  if (theta.size() != 3) throw ValidationError("to_grain_params: expected 3 coordinates");
  sim::GrainParams p;
  p.mu_s = theta[0];
  p.mu_r = std::exp(theta[1]);
  p.e = theta[2];
  return p;
}

}  // namespace granulab::inference
