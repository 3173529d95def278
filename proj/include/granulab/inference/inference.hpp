#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "granulab/core/json.hpp"
#include "granulab/sim/types.hpp"

// Likelihood-free posterior estimation: a mixture density network over
// random Fourier features of summary statistics. Dimensions are generic so
// the same machinery serves the 3-parameter grain task and small side
// studies; the grain task works in (mu_s, ln mu_r, e) so rolling friction
// is log-uniform under the box prior.

namespace granulab::inference {

inline constexpr std::size_t kDefaultFeatureCount = 200;
inline constexpr std::size_t kDefaultComponentCount = 3;

// Axis-aligned box prior, uniform per coordinate.
struct Prior {
  std::vector<std::string> names;
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  void validate() const;
  bool contains(const std::vector<double>& theta) const;
};

// (mu_s, ln mu_r, e) box used by the grain experiments.
Prior granular_prior();

// count i.i.d. draws, one row per draw, in prior coordinates.
std::vector<std::vector<double>> sample_prior(const Prior& prior, std::size_t count,
                                              std::uint64_t seed);

// Conversions between inference coordinates and simulator parameters.
std::vector<double> to_inference_coords(const sim::GrainParams& p);
sim::GrainParams to_grain_params(const std::vector<double>& theta);

// Matern nu=2.5 kernel, d = elementwise-scaled Euclidean distance.
double matern25(const std::vector<double>& x, const std::vector<double>& y,
                const std::vector<double>& lengthscales);

// Realized random-Fourier-feature map phi(x) = sqrt(2/D) cos(Omega x + b).
// Omega rows follow the Matern-2.5 spectral density: multivariate t with
// 5 degrees of freedom (normal rows divided by sqrt of a Gamma(2.5, 0.4)
// draw), scaled by inverse lengthscales.
struct RffConfig {
  std::size_t feature_count = kDefaultFeatureCount;
  double smoothness = 2.5;
  std::vector<double> lengthscales;
  std::vector<std::vector<double>> omega;
  std::vector<double> phase;
  std::uint64_t seed = 0;

  std::size_t stat_dim() const { return lengthscales.size(); }
  void validate() const;
};

RffConfig make_rff(std::size_t feature_count, const std::vector<double>& lengthscales,
                   std::uint64_t seed);

std::vector<double> rff_features(const std::vector<double>& stats, const RffConfig& rff);

// Median pairwise absolute difference per dimension; constant dimensions
// fall back to 1. Rows are expected already standardized.
std::vector<double> median_lengthscales(const std::vector<std::vector<double>>& rows);

// Paired draws (theta_i, stats_i) plus the standardization constants
// derived from exactly these rows. Stats are stored raw.
struct TrainingSet {
  std::vector<std::vector<double>> params;
  std::vector<std::vector<double>> stats;
  std::vector<double> stat_mean;
  std::vector<double> stat_std;
  Prior prior;
  Json provenance;

  std::size_t size() const { return params.size(); }
  std::size_t param_dim() const { return params.empty() ? 0 : params[0].size(); }
  std::size_t stat_dim() const { return stat_mean.size(); }
};

TrainingSet make_training_set(std::vector<std::vector<double>> params,
                              std::vector<std::vector<double>> stats, Prior prior,
                              Json provenance = Json::object());

std::vector<double> standardize_stats(const std::vector<double>& stats,
                                      const std::vector<double>& mean,
                                      const std::vector<double>& stddev);

struct RffOptions {
  std::size_t feature_count = kDefaultFeatureCount;
};

struct TrainSchedule {
  int max_epochs = 4000;
  double initial_step = 0.02;
  double plateau_rel_improvement = 1e-5;
  int plateau_epochs = 50;
  std::uint64_t seed = 0;
};

struct TrainDiagnostics {
  double final_loss = 0.0;
  int epochs = 0;
  bool early_stopped = false;
};

// Affine map from D features to mixture parameters. Output layout:
// [K logits][K x P means, component-major][K x P log-scales].
struct MdrffModel {
  RffConfig rff;
  std::size_t component_count = 0;
  std::size_t param_dim = 0;
  std::vector<double> weights;  // row-major, out_dim x D
  std::vector<double> biases;   // out_dim
  std::vector<double> stat_mean;
  std::vector<double> stat_std;
  Prior prior;
  TrainDiagnostics diagnostics;
  Json provenance;

  std::size_t out_dim() const { return component_count * (1 + 2 * param_dim); }
  void validate() const;
};

// Full-batch maximization of the mean conditional log-likelihood with
// sign-based per-parameter adaptive steps and a global backtracking
// fallback, so accepted steps never increase the loss.
MdrffModel train(const TrainingSet& data, std::size_t component_count, const RffOptions& rff,
                 const TrainSchedule& schedule);

// Diagonal Gaussian mixture over prior coordinates. Means are clipped
// into the prior box; the density itself is untruncated.
struct Posterior {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> scales;
  Prior prior;

  std::size_t component_count() const { return weights.size(); }
  std::size_t param_dim() const { return means.empty() ? 0 : means[0].size(); }
  double log_density(const std::vector<double>& theta) const;
  double density(const std::vector<double>& theta) const;
};

Posterior predict_posterior(const MdrffModel& model, const std::vector<double>& stats);

std::vector<std::vector<double>> sample_posterior(const Posterior& posterior, std::size_t count,
                                                  std::uint64_t seed);

// Mixture mode: ascent from the highest-weight component mean, projected
// into the prior box, then cross-checked against every component mean so
// the result never scores below one.
std::vector<double> posterior_mode(const Posterior& posterior);

// Grain-task wrapper: mode in (mu_s, ln mu_r, e) with mu_r exponentiated.
sim::GrainParams point_estimate(const Posterior& posterior);

// Versioned JSON round-trip. Loading validates internal consistency and
// refuses documents whose statistic-vector length does not match.
Json model_to_json(const MdrffModel& model);
MdrffModel model_from_json(const Json& j);
void save_model(const std::filesystem::path& path, const MdrffModel& model);
MdrffModel load_model(const std::filesystem::path& path);

}  // namespace granulab::inference
