#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "granulab/core/error.hpp"
#include "granulab/core/nelder_mead.hpp"
#include "granulab/core/rng.hpp"
#include "granulab/core/stats_util.hpp"
#include "granulab/inference/inference.hpp"

namespace granulab::inference {

namespace {

constexpr std::uint64_t kRffSalt = 0x726666ULL;
constexpr std::uint64_t kInitSalt = 0x696e6974ULL;
constexpr std::uint64_t kDrawSalt = 0x64726177ULL;

constexpr double kLogScaleMin = -10.0;
constexpr double kLogScaleMax = 5.0;
constexpr double kStepMax = 0.25;
constexpr double kStepMin = 1e-12;
constexpr int kMaxBacktracks = 40;
constexpr double kHalfLog2Pi = 0.9189385332046727;

// Components wider than the prior box dimension carry no meaning for a
// box posterior, so the scale head is capped near the uniform spread.
std::vector<double> scale_caps(const Prior& prior) {
  std::vector<double> caps(prior.dim());
  for (std::size_t p = 0; p < prior.dim(); ++p) {
    double range = prior.hi[p] - prior.lo[p];
    caps[p] = range > 0.0 ? std::min(kLogScaleMax, std::log(0.35 * range)) : kLogScaleMin;
  }
  return caps;
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Mixture parameters and per-sample gradients for one affine output
// vector a, laid out [K logits][K*P means][K*P log-scales]. Log-scales
// are clamped to [s_lo[p], s_hi[p]]; training anneals the floor.
struct MixtureEval {
  std::size_t kk, pp;
  std::vector<double> s_lo, s_hi;
  std::vector<double> logw, logjoint, resp;

  MixtureEval(std::size_t k, std::size_t p)
      : kk(k), pp(p), s_lo(p, kLogScaleMin), s_hi(p, kLogScaleMax), logw(k), logjoint(k),
        resp(k) {}

  // Returns log-likelihood of theta; fills da with d(-loglik)/da if given.
  double operator()(const std::vector<double>& a, const std::vector<double>& theta,
                    std::vector<double>* da) {
    double lmax = a[0];
    for (std::size_t k = 1; k < kk; ++k) lmax = std::max(lmax, a[k]);
    double lse = 0.0;
    for (std::size_t k = 0; k < kk; ++k) lse += std::exp(a[k] - lmax);
    lse = std::log(lse) + lmax;

    for (std::size_t k = 0; k < kk; ++k) {
      logw[k] = a[k] - lse;
      double acc = -kHalfLog2Pi * static_cast<double>(pp);
      for (std::size_t p = 0; p < pp; ++p) {
        double s = std::clamp(a[kk + kk * pp + k * pp + p], s_lo[p], s_hi[p]);
        double z = (theta[p] - a[kk + k * pp + p]) * std::exp(-s);
        acc += -0.5 * z * z - s;
      }
      logjoint[k] = logw[k] + acc;
    }
    double jmax = logjoint[0];
    for (std::size_t k = 1; k < kk; ++k) jmax = std::max(jmax, logjoint[k]);
    double jsum = 0.0;
    for (std::size_t k = 0; k < kk; ++k) jsum += std::exp(logjoint[k] - jmax);
    double logp = std::log(jsum) + jmax;

    if (da) {
      for (std::size_t k = 0; k < kk; ++k) {
        resp[k] = std::exp(logjoint[k] - logp);
        (*da)[k] = std::exp(logw[k]) - resp[k];
        for (std::size_t p = 0; p < pp; ++p) {
          double sraw = a[kk + kk * pp + k * pp + p];
          double s = std::clamp(sraw, s_lo[p], s_hi[p]);
          double sigma = std::exp(s);
          double z = (theta[p] - a[kk + k * pp + p]) / sigma;
          (*da)[kk + k * pp + p] = -resp[k] * z / sigma;
          (*da)[kk + kk * pp + k * pp + p] =
              (sraw == s) ? -resp[k] * (z * z - 1.0) : 0.0;
        }
      }
    }
    return logp;
  }
};

}  // namespace

std::vector<double> standardize_stats(const std::vector<double>& stats,
                                      const std::vector<double>& mean,
                                      const std::vector<double>& stddev) {
  if (stats.size() != mean.size() || stats.size() != stddev.size())
    throw ValidationError("standardize_stats: dimension mismatch");
  std::vector<double> out(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i)
    out[i] = stddev[i] > 1e-12 ? (stats[i] - mean[i]) / stddev[i] : 0.0;
  return out;
}

TrainingSet make_training_set(std::vector<std::vector<double>> params,
                              std::vector<std::vector<double>> stats, Prior prior,
                              Json provenance) {
  prior.validate();
  if (params.size() < 2) throw ValidationError("training set needs at least 2 rows");
  if (stats.size() != params.size())
    throw ValidationError("training set: params and stats row counts differ");
  std::size_t pdim = prior.dim();
  std::size_t sdim = stats[0].size();
  if (sdim == 0) throw ValidationError("training set: empty statistic rows");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != pdim) throw ValidationError("training set: ragged parameter rows");
    if (stats[i].size() != sdim) throw ValidationError("training set: ragged statistic rows");
    if (!all_finite(params[i]) || !all_finite(stats[i]))
      throw DataError("training set: non-finite values in row " + std::to_string(i));
  }

  TrainingSet data;
  data.params = std::move(params);
  data.stats = std::move(stats);
  data.prior = std::move(prior);
  data.provenance = std::move(provenance);
  data.stat_mean.resize(sdim);
  data.stat_std.resize(sdim);
  std::vector<double> col(data.stats.size());
  for (std::size_t d = 0; d < sdim; ++d) {
    for (std::size_t i = 0; i < data.stats.size(); ++i) col[i] = data.stats[i][d];
    data.stat_mean[d] = mean_of(col);
    data.stat_std[d] = stddev_pop(col);
  }
  return data;
}

void MdrffModel::validate() const {
  rff.validate();
  if (component_count == 0 || param_dim == 0)
    throw ValidationError("model: component and parameter counts must be positive");
  if (stat_mean.size() != rff.stat_dim() || stat_std.size() != rff.stat_dim())
    throw ValidationError("model: standardization constants mismatch statistic length");
  if (weights.size() != out_dim() * rff.feature_count || biases.size() != out_dim())
    throw ValidationError("model: affine map size mismatch");
  prior.validate();
  if (prior.dim() != param_dim) throw ValidationError("model: prior dimension mismatch");
}

MdrffModel train(const TrainingSet& data, std::size_t component_count, const RffOptions& rff_opt,
                 const TrainSchedule& schedule) {
  const std::size_t n = data.size();
  const std::size_t pdim = data.param_dim();
  if (n < 2) throw ValidationError("train: need at least 2 rows");
  if (component_count == 0) throw ValidationError("train: component count must be positive");
  if (component_count > n)
    throw ValidationError("train: component count exceeds training rows");
  if (schedule.max_epochs < 1 || schedule.initial_step <= 0.0)
    throw ValidationError("train: invalid schedule");

  std::vector<std::vector<double>> xs(n);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = standardize_stats(data.stats[i], data.stat_mean, data.stat_std);

  RffConfig rff =
      make_rff(rff_opt.feature_count, median_lengthscales(xs), mix_seed(schedule.seed, kRffSalt));
  const std::size_t dd = rff.feature_count;
  std::vector<double> features(n * dd);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> phi = rff_features(xs[i], rff);
    std::copy(phi.begin(), phi.end(), features.begin() + static_cast<std::ptrdiff_t>(i * dd));
  }

  const std::size_t kk = component_count;
  const std::size_t out = kk * (1 + 2 * pdim);
  const std::size_t total = out * dd + out;

  // Biases carry the data-driven init: mean biases at parameter quantiles
  // so components start separated, log-scale biases at the column spread.
  std::vector<double> psi(total, 0.0);
  Rng init_rng(mix_seed(schedule.seed, kInitSalt));
  for (double& w : psi) w = init_rng.normal(0.0, 1e-3);
  double* bias = psi.data() + out * dd;
  for (std::size_t k = 0; k < kk; ++k) bias[k] = 0.0;
  std::vector<double> col(n);
  for (std::size_t p = 0; p < pdim; ++p) {
    for (std::size_t i = 0; i < n; ++i) col[i] = data.params[i][p];
    std::sort(col.begin(), col.end());
    double spread = stddev_pop(col);
    double log_scale = std::log(std::max(spread, 1e-6));
    for (std::size_t k = 0; k < kk; ++k) {
      double q = (static_cast<double>(k) + 0.5) / static_cast<double>(kk);
      bias[kk + k * pdim + p] = quantile_sorted(col, q);
      bias[kk + kk * pdim + k * pdim + p] = std::clamp(log_scale, kLogScaleMin, kLogScaleMax);
    }
  }

  MixtureEval mix(kk, pdim);
  std::vector<double> a(out), da(out);
  auto eval = [&](const std::vector<double>& params, std::vector<double>* grad) {
    if (grad) std::fill(grad->begin(), grad->end(), 0.0);
    const double* w = params.data();
    const double* c = params.data() + out * dd;
    double nll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* phi = features.data() + i * dd;
      for (std::size_t o = 0; o < out; ++o) {
        double acc = c[o];
        const double* row = w + o * dd;
        for (std::size_t d = 0; d < dd; ++d) acc += row[d] * phi[d];
        a[o] = acc;
      }
      nll -= mix(a, data.params[i], grad ? &da : nullptr);
      if (grad) {
        double* gw = grad->data();
        double* gc = grad->data() + out * dd;
        for (std::size_t o = 0; o < out; ++o) {
          double g = da[o];
          if (g == 0.0) continue;
          double* row = gw + o * dd;
          for (std::size_t d = 0; d < dd; ++d) row[d] += g * phi[d];
          gc[o] += g;
        }
      }
    }
    double inv_n = 1.0 / static_cast<double>(n);
    if (grad)
      for (double& g : *grad) g *= inv_n;
    return nll * inv_n;
  };

  std::vector<double> grad(total), grad_new(total), psi_new(total);
  std::vector<double> step(total, schedule.initial_step);
  TrainDiagnostics diag;
  double nll = 0.0;

  // One monotone pass: sign steps per parameter, global backtracking, stop
  // on plateau or when no improving step exists. Returns epochs consumed.
  auto run_phase = [&](int budget, bool final_phase) {
    nll = eval(psi, &grad);
    if (!std::isfinite(nll) || !all_finite(grad))
      throw NumericalError("train: non-finite loss at initialization (loss=" +
                           std::to_string(nll) + ")");
    std::vector<double> history{nll};
    int used = 0;
    for (int epoch = 1; epoch <= budget; ++epoch) {
      double trial = 1.0;
      double nll_new = nll;
      bool accepted = false;
      for (int bt = 0; bt < kMaxBacktracks; ++bt) {
        for (std::size_t j = 0; j < total; ++j) {
          double dir = grad[j] > 0.0 ? -1.0 : (grad[j] < 0.0 ? 1.0 : 0.0);
          psi_new[j] = psi[j] + dir * step[j] * trial;
        }
        nll_new = eval(psi_new, &grad_new);
        if (std::isfinite(nll_new) && nll_new <= nll) {
          accepted = true;
          break;
        }
        trial *= 0.5;
      }
      if (!accepted) break;
      if (!all_finite(grad_new))
        throw NumericalError("train: non-finite gradient at epoch " + std::to_string(epoch));

      for (std::size_t j = 0; j < total; ++j) {
        double agree = grad[j] * grad_new[j];
        step[j] *= trial;
        if (agree > 0.0)
          step[j] = std::min(step[j] * 1.2, kStepMax);
        else if (agree < 0.0)
          step[j] = std::max(step[j] * 0.5, kStepMin);
      }
      psi.swap(psi_new);
      grad.swap(grad_new);
      nll = nll_new;
      used = epoch;
      history.push_back(nll);

      std::size_t lag = static_cast<std::size_t>(schedule.plateau_epochs);
      if (history.size() > lag) {
        double then = history[history.size() - 1 - lag];
        if (then - nll < schedule.plateau_rel_improvement * (1.0 + std::fabs(then))) {
          if (final_phase) diag.early_stopped = true;
          break;
        }
      }
    }
    return used;
  };

  // Warm start under an annealed variance floor: holding each component
  // scale within two log units of the column spread keeps the loss
  // surface benign while the means converge, then the floor drops and
  // the scales sharpen to the residuals. Releasing the scales too early
  // lets them collapse around half-fit means, and the sign steps then
  // crawl through the resulting narrow valley.
  mix.s_hi = scale_caps(data.prior);
  for (std::size_t p = 0; p < pdim; ++p)
    mix.s_lo[p] = bias[kk + kk * pdim + p] - 2.0;
  int spent = run_phase(schedule.max_epochs / 2, false);
  std::fill(mix.s_lo.begin(), mix.s_lo.end(), kLogScaleMin);
  std::fill(step.begin(), step.end(), schedule.initial_step);
  spent += run_phase(schedule.max_epochs - spent, true);
  diag.epochs = spent;
  diag.final_loss = nll;

  MdrffModel model;
  model.rff = std::move(rff);
  model.component_count = kk;
  model.param_dim = pdim;
  model.weights.assign(psi.begin(), psi.begin() + static_cast<std::ptrdiff_t>(out * dd));
  model.biases.assign(psi.begin() + static_cast<std::ptrdiff_t>(out * dd), psi.end());
  model.stat_mean = data.stat_mean;
  model.stat_std = data.stat_std;
  model.prior = data.prior;
  model.diagnostics = diag;
  model.provenance = data.provenance;
  return model;
}

Posterior predict_posterior(const MdrffModel& model, const std::vector<double>& stats) {
  model.validate();
  if (stats.size() != model.stat_mean.size())
    throw ValidationError("predict_posterior: statistic vector length mismatch");

  std::vector<double> phi =
      rff_features(standardize_stats(stats, model.stat_mean, model.stat_std), model.rff);
  const std::size_t kk = model.component_count;
  const std::size_t pdim = model.param_dim;
  const std::size_t out = model.out_dim();
  const std::size_t dd = model.rff.feature_count;
  std::vector<double> a(out);
  for (std::size_t o = 0; o < out; ++o) {
    double acc = model.biases[o];
    const double* row = model.weights.data() + o * dd;
    for (std::size_t d = 0; d < dd; ++d) acc += row[d] * phi[d];
    a[o] = acc;
  }

  std::vector<double> caps = scale_caps(model.prior);
  Posterior post;
  post.prior = model.prior;
  post.weights.resize(kk);
  post.means.assign(kk, std::vector<double>(pdim));
  post.scales.assign(kk, std::vector<double>(pdim));
  double lmax = a[0];
  for (std::size_t k = 1; k < kk; ++k) lmax = std::max(lmax, a[k]);
  double lse = 0.0;
  for (std::size_t k = 0; k < kk; ++k) lse += std::exp(a[k] - lmax);
  for (std::size_t k = 0; k < kk; ++k) {
    post.weights[k] = std::exp(a[k] - lmax) / lse;
    for (std::size_t p = 0; p < pdim; ++p) {
      post.means[k][p] =
          std::clamp(a[kk + k * pdim + p], model.prior.lo[p], model.prior.hi[p]);
      post.scales[k][p] = std::exp(
          std::clamp(a[kk + kk * pdim + k * pdim + p], kLogScaleMin, caps[p]));
    }
  }
  return post;
}

double Posterior::log_density(const std::vector<double>& theta) const {
  if (theta.size() != param_dim()) throw ValidationError("log_density: dimension mismatch");
  double best = -1e300;
  std::vector<double> terms(weights.size(), -1e300);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    double acc = std::log(weights[k]) - kHalfLog2Pi * static_cast<double>(param_dim());
    for (std::size_t p = 0; p < theta.size(); ++p) {
      double z = (theta[p] - means[k][p]) / scales[k][p];
      acc += -0.5 * z * z - std::log(scales[k][p]);
    }
    terms[k] = acc;
    best = std::max(best, acc);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - best);
  return std::log(sum) + best;
}

double Posterior::density(const std::vector<double>& theta) const {
  return std::exp(log_density(theta));
}

std::vector<std::vector<double>> sample_posterior(const Posterior& posterior, std::size_t count,
                                                  std::uint64_t seed) {
  if (posterior.weights.empty()) throw ValidationError("sample_posterior: empty mixture");
  Rng rng(mix_seed(seed, kDrawSalt));
  std::vector<std::vector<double>> draws(count, std::vector<double>(posterior.param_dim()));
  for (auto& row : draws) {
    double u = rng.uniform01();
    std::size_t k = 0;
    double acc = 0.0;
    for (; k + 1 < posterior.weights.size(); ++k) {
      acc += posterior.weights[k];
      if (u < acc) break;
    }
    for (std::size_t p = 0; p < row.size(); ++p)
      row[p] = rng.normal(posterior.means[k][p], posterior.scales[k][p]);
  }
  return draws;
}

std::vector<double> posterior_mode(const Posterior& posterior) {
  const std::size_t kk = posterior.component_count();
  const std::size_t pdim = posterior.param_dim();
  if (kk == 0 || pdim == 0) throw ValidationError("posterior_mode: empty posterior");
  if (kk == 1) return posterior.means[0];

  auto clamp_into_box = [&](std::vector<double> x) {
    for (std::size_t p = 0; p < pdim; ++p)
      x[p] = std::clamp(x[p], posterior.prior.lo[p], posterior.prior.hi[p]);
    return x;
  };
  auto ascend = [&](const std::vector<double>& from, const std::vector<double>& scale) {
    std::vector<double> steps(pdim);
    for (std::size_t p = 0; p < pdim; ++p) steps[p] = std::max(0.5 * scale[p], 1e-9);
    NelderMeadOptions opt;
    opt.max_evaluations = 2000;
    NelderMeadResult r = nelder_mead(
        [&](const std::vector<double>& x) { return -posterior.log_density(x); }, from, steps,
        opt);
    return clamp_into_box(r.x);
  };

  std::size_t top = 0;
  for (std::size_t k = 1; k < kk; ++k)
    if (posterior.weights[k] > posterior.weights[top]) top = k;
  std::vector<double> best = ascend(posterior.means[top], posterior.scales[top]);
  double best_val = posterior.log_density(best);

  // The mode must score at least every component mean; if one beats the
  // first ascent, climb again from there.
  for (std::size_t k = 0; k < kk; ++k) {
    if (posterior.log_density(posterior.means[k]) <= best_val) continue;
    std::vector<double> cand = ascend(posterior.means[k], posterior.scales[k]);
    double val = posterior.log_density(cand);
    if (val > best_val) {
      best = cand;
      best_val = val;
    }
    if (posterior.log_density(posterior.means[k]) > best_val) {
      best = posterior.means[k];
      best_val = posterior.log_density(best);
    }
  }
  return best;
}

sim::GrainParams point_estimate(const Posterior& posterior) {
  if (posterior.param_dim() != 3)
    throw ValidationError("point_estimate: posterior is not over (mu_s, ln mu_r, e)");
  return to_grain_params(posterior_mode(posterior));
}

}  // namespace granulab::inference
