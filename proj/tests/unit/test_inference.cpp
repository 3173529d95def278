#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "granulab/core/error.hpp"
#include "granulab/core/rng.hpp"
#include "granulab/core/stats_util.hpp"
#include "granulab/inference/inference.hpp"

using namespace granulab;
using namespace granulab::inference;

namespace {

// mu_s-only synthetic with a wiggly forward map, so sample count matters.
std::vector<double> wiggly_stats(double th, Rng& noise) {
  return {2.0 * th + 0.3 * std::sin(9.0 * th) + 0.08 * noise.normal(),
          std::cos(5.0 * th) + 0.08 * noise.normal(), th * th + 0.08 * noise.normal(),
          0.7 * th + 0.08 * noise.normal()};
}

TrainingSet three_param_set(std::size_t n, std::uint64_t seed) {
  Prior prior = granular_prior();
  auto thetas = sample_prior(prior, n, seed);
  Rng noise(mix_seed(seed, 77));
  std::vector<std::vector<double>> stats(n);
  for (std::size_t i = 0; i < n; ++i) {
    double a = thetas[i][0], b = thetas[i][1], c = thetas[i][2];
    stats[i] = {2.0 * a + 0.02 * noise.normal(), 0.3 * b + 0.02 * noise.normal(),
                c - a + 0.02 * noise.normal(), a * c + 0.02 * noise.normal()};
  }
  return make_training_set(std::move(thetas), std::move(stats), prior);
}

}  // namespace

TEST_CASE("prior sampling stays in range and mu_r is log-uniform") {
  Prior prior = granular_prior();
  CHECK(prior.dim() == 3);
  CHECK(prior.names[1] == "ln_mu_r");

  auto draws = sample_prior(prior, 10000, 21);
  REQUIRE(draws.size() == 10000);
  std::vector<double> mu_r;
  for (const auto& row : draws) {
    REQUIRE(prior.contains(row));
    mu_r.push_back(std::exp(row[1]));
  }
  // log-uniform median is the geometric midpoint 1e-4; allow half a decade
  double med = quantile_of(mu_r, 0.5);
  CHECK(med > 1e-4 / std::sqrt(10.0));
  CHECK(med < 1e-4 * std::sqrt(10.0));

  auto again = sample_prior(prior, 10000, 21);
  CHECK(draws == again);
  CHECK(sample_prior(prior, 100, 22) != draws);

  Prior flat = prior;
  flat.lo[2] = flat.hi[2] = 0.25;
  for (const auto& row : sample_prior(flat, 100, 5)) CHECK(row[2] == 0.25);

  Prior bad = prior;
  bad.lo[0] = 2.0;
  CHECK_THROWS_AS(sample_prior(bad, 10, 1), ValidationError);
  CHECK_FALSE(prior.contains({0.5, 0.0, 0.5}));
  CHECK(prior.contains({0.5, -5.0, 0.5}));
}

TEST_CASE("parameter coordinate conversions") {
  sim::GrainParams p;
  p.mu_s = 0.3;
  p.mu_r = 1e-4;
  p.e = 0.7;
  auto theta = to_inference_coords(p);
  CHECK(theta[0] == 0.3);
  CHECK(theta[1] == doctest::Approx(std::log(1e-4)).epsilon(1e-12));
  CHECK(theta[2] == 0.7);
  auto back = to_grain_params(theta);
  CHECK(back.mu_s == 0.3);
  CHECK(back.mu_r == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(back.e == 0.7);
  CHECK_THROWS_AS(to_grain_params({0.1, 0.2}), ValidationError);
  p.mu_r = 0.0;
  CHECK_THROWS_AS(to_inference_coords(p), ValidationError);
}

TEST_CASE("matern kernel values") {
  std::vector<double> ls{1.0, 1.0};
  CHECK(matern25({0.3, -0.7}, {0.3, -0.7}, ls) == 1.0);

  // hand value at scaled distance 1
  double sqrt5 = std::sqrt(5.0);
  double hand = (1.0 + sqrt5 + 5.0 / 3.0) * std::exp(-sqrt5);
  CHECK(matern25({1.0}, {0.0}, {1.0}) == doctest::Approx(hand).epsilon(1e-12));
  CHECK(hand == doctest::Approx(0.5240).epsilon(1e-3));

  // monotone decay in distance
  double prev = 1.0;
  for (double d = 0.25; d < 8.1; d += 0.25) {
    double k = matern25({d}, {0.0}, {1.0});
    CHECK(k < prev);
    prev = k;
  }
  CHECK(prev < 1e-4);

  // lengthscale rescales distance
  CHECK(matern25({2.0}, {0.0}, {2.0}) == doctest::Approx(matern25({1.0}, {0.0}, {1.0})));

  CHECK_THROWS_AS(matern25({1.0, 2.0}, {0.0}, {1.0}), ValidationError);
  CHECK_THROWS_AS(matern25({1.0}, {0.0}, {0.0}), ValidationError);
  CHECK_THROWS_AS(matern25({}, {}, {}), ValidationError);
}

TEST_CASE("random features approximate the kernel") {
  std::vector<double> ls(16);
  Rng rng(99);
  for (auto& l : ls) l = 0.5 + rng.uniform01();

  std::vector<std::vector<double>> xs(100), ys(100);
  for (int p = 0; p < 100; ++p) {
    xs[p].resize(16);
    ys[p].resize(16);
    for (int d = 0; d < 16; ++d) {
      xs[p][d] = rng.normal();
      ys[p][d] = rng.normal();
    }
  }

  std::vector<double> est(100, 0.0);
  for (int draw = 0; draw < 50; ++draw) {
    RffConfig rff = make_rff(2000, ls, 1000 + static_cast<std::uint64_t>(draw));
    for (int p = 0; p < 100; ++p) {
      auto fx = rff_features(xs[p], rff);
      auto fy = rff_features(ys[p], rff);
      double dot = 0.0;
      for (int i = 0; i < 2000; ++i) dot += fx[i] * fy[i];
      est[p] += dot / 50.0;
    }
  }
  double worst = 0.0;
  for (int p = 0; p < 100; ++p)
    worst = std::max(worst, std::fabs(est[p] - matern25(xs[p], ys[p], ls)));
  CHECK(worst <= 0.05);
}

TEST_CASE("feature map basics") {
  std::vector<double> ls{1.0, 2.0, 0.5};
  RffConfig rff = make_rff(128, ls, 7);
  rff.validate();
  CHECK(rff.stat_dim() == 3);

  auto phi = rff_features({0.4, -1.2, 3.0}, rff);
  REQUIRE(phi.size() == 128);
  double norm2 = 0.0;
  for (double v : phi) norm2 += v * v;
  CHECK(norm2 <= 2.0);

  CHECK(phi == rff_features({0.4, -1.2, 3.0}, make_rff(128, ls, 7)));
  CHECK(phi != rff_features({0.4, -1.2, 3.0}, make_rff(128, ls, 8)));

  // Lipschitz: ||phi(x)-phi(y)|| <= sqrt(2/D) ||Omega (x-y)||
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(3), y(3);
    for (int d = 0; d < 3; ++d) {
      x[d] = 3.0 * rng.normal();
      y[d] = 3.0 * rng.normal();
    }
    auto fx = rff_features(x, rff);
    auto fy = rff_features(y, rff);
    double lhs = 0.0, proj = 0.0;
    for (std::size_t i = 0; i < 128; ++i) {
      lhs += (fx[i] - fy[i]) * (fx[i] - fy[i]);
      double w = 0.0;
      for (int d = 0; d < 3; ++d) w += rff.omega[i][d] * (x[d] - y[d]);
      proj += w * w;
    }
    CHECK(std::sqrt(lhs) <= std::sqrt(2.0 / 128.0) * std::sqrt(proj) + 1e-12);
  }

  CHECK_THROWS_AS(rff_features({1.0}, rff), ValidationError);
  CHECK_THROWS_AS(make_rff(0, ls, 1), ValidationError);
  CHECK_THROWS_AS(make_rff(16, {1.0, -1.0}, 1), ValidationError);
}

TEST_CASE("median heuristic lengthscales") {
  // gaps in dim 0: |0-1|=1, |0-3|=3, |1-3|=2 -> median 2
  std::vector<std::vector<double>> rows{{0.0, 5.0}, {1.0, 5.0}, {3.0, 5.0}};
  auto ls = median_lengthscales(rows);
  CHECK(ls[0] == 2.0);
  CHECK(ls[1] == 1.0);  // constant dimension falls back to 1
  CHECK_THROWS_AS(median_lengthscales({{1.0}}), ValidationError);
  CHECK_THROWS_AS(median_lengthscales({{1.0}, {1.0, 2.0}}), ValidationError);
}

TEST_CASE("training set construction and standardization") {
  Prior prior{{"a", "b"}, {0.0, 0.0}, {1.0, 1.0}};
  std::vector<std::vector<double>> params{{0.1, 0.2}, {0.5, 0.6}, {0.9, 0.4}};
  std::vector<std::vector<double>> stats{{1.0, 10.0}, {2.0, 10.0}, {3.0, 10.0}};
  auto data = make_training_set(params, stats, prior);
  CHECK(data.size() == 3);
  CHECK(data.stat_mean[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(data.stat_mean[1] == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(data.stat_std[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(data.stat_std[1] == 0.0);

  auto z = standardize_stats({3.0, 10.0}, data.stat_mean, data.stat_std);
  CHECK(z[0] == doctest::Approx(1.0 / std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(z[1] == 0.0);  // constant column maps to zero
  CHECK_THROWS_AS(standardize_stats({1.0}, data.stat_mean, data.stat_std), ValidationError);

  CHECK_THROWS_AS(make_training_set({{0.1, 0.2}}, {{1.0}}, prior), ValidationError);
  CHECK_THROWS_AS(make_training_set({{0.1}, {0.2}}, {{1.0}, {2.0}}, prior), ValidationError);
  auto bad_stats = stats;
  bad_stats[1][0] = std::nan("");
  CHECK_THROWS_AS(make_training_set(params, bad_stats, prior), DataError);
}

TEST_CASE("identity task recovers the parameter") {
  Prior prior{{"theta"}, {-1.0}, {1.0}};
  auto thetas = sample_prior(prior, 500, 42);
  auto data = make_training_set(thetas, thetas, prior);
  TrainSchedule sched;
  sched.seed = 7;
  auto model = train(data, 1, RffOptions{}, sched);
  CHECK(std::isfinite(model.diagnostics.final_loss));
  CHECK(model.diagnostics.epochs > 0);

  double prior_std = 2.0 / std::sqrt(12.0);
  for (double t = -0.9; t <= 0.901; t += 0.1) {
    auto post = predict_posterior(model, {t});
    CHECK(std::fabs(post.means[0][0] - t) <= 0.02);
    CHECK(post.scales[0][0] <= prior_std);  // contraction
    CHECK(post.weights[0] == 1.0);
    // K=1: the mode is the component mean, exactly
    CHECK(posterior_mode(post) == post.means[0]);
  }
}

TEST_CASE("bimodal task splits into symmetric components") {
  Prior prior{{"theta"}, {-1.0}, {1.0}};
  auto thetas = sample_prior(prior, 600, 11);
  std::vector<std::vector<double>> stats(600);
  for (int i = 0; i < 600; ++i) stats[i] = {thetas[i][0] * thetas[i][0]};
  auto data = make_training_set(thetas, stats, prior);
  TrainSchedule sched;
  sched.seed = 3;
  auto model = train(data, 2, RffOptions{}, sched);

  for (double tv : {0.25, 0.49, 0.64}) {
    auto post = predict_posterior(model, {tv});
    double root = std::sqrt(tv);
    double lo = std::min(post.means[0][0], post.means[1][0]);
    double hi = std::max(post.means[0][0], post.means[1][0]);
    CHECK(std::fabs(lo + root) <= 0.1);
    CHECK(std::fabs(hi - root) <= 0.1);
    CHECK(post.weights[0] >= 0.3);
    CHECK(post.weights[0] <= 0.7);
    CHECK(post.weights[1] >= 0.3);
    CHECK(post.weights[1] <= 0.7);
  }
}

TEST_CASE("training rejects bad setups") {
  auto data = three_param_set(10, 1);
  CHECK_THROWS_AS(train(data, 0, RffOptions{}, TrainSchedule{}), ValidationError);
  CHECK_THROWS_AS(train(data, 11, RffOptions{}, TrainSchedule{}), ValidationError);
  TrainSchedule bad;
  bad.max_epochs = 0;
  CHECK_THROWS_AS(train(data, 1, RffOptions{}, bad), ValidationError);
  bad = TrainSchedule{};
  bad.initial_step = -1.0;
  CHECK_THROWS_AS(train(data, 1, RffOptions{}, bad), ValidationError);
}

TEST_CASE("posterior prediction respects the box and normalizes") {
  auto data = three_param_set(600, 5);
  TrainSchedule sched;
  sched.seed = 9;
  auto model = train(data, 3, RffOptions{}, sched);

  auto model2 = train(data, 3, RffOptions{}, sched);
  CHECK(model.weights == model2.weights);  // end-to-end determinism
  CHECK(model.biases == model2.biases);

  auto post = predict_posterior(model, data.stats[0]);
  double wsum = 0.0;
  for (double w : post.weights) {
    CHECK(w >= 0.0);
    wsum += w;
  }
  CHECK(std::fabs(wsum - 1.0) <= 1e-12);
  for (std::size_t k = 0; k < post.component_count(); ++k)
    for (std::size_t p = 0; p < 3; ++p) {
      CHECK(post.means[k][p] >= post.prior.lo[p]);
      CHECK(post.means[k][p] <= post.prior.hi[p]);
      CHECK(post.scales[k][p] > 0.0);
    }

  // aggregate mass inside the prior box on held-out statistics; individual
  // points whose truth sits at a box edge leak by construction (the clipped
  // mean centers half a tight component's mass outside), so the invariant
  // holds in aggregate, not pointwise
  auto held = three_param_set(40, 333);
  int inside = 0, total = 0;
  for (std::size_t i = 0; i < held.size(); ++i) {
    auto p = predict_posterior(model, held.stats[i]);
    for (const auto& draw : sample_posterior(p, 400, 1234 + i)) {
      inside += p.prior.contains(draw) ? 1 : 0;
      ++total;
    }
  }
  CHECK(static_cast<double>(inside) / total >= 0.95);

  CHECK_THROWS_AS(predict_posterior(model, {1.0, 2.0}), ValidationError);
}

TEST_CASE("hand-built mixture density integrates to one") {
  Posterior post;
  post.prior = Prior{{"a", "b", "c"}, {-20.0, -20.0, -20.0}, {20.0, 20.0, 20.0}};
  post.weights = {0.3, 0.7};
  post.means = {{0.0, 0.0, 0.0}, {1.0, 2.0, -1.0}};
  post.scales = {{0.5, 1.0, 0.7}, {1.2, 0.6, 0.9}};

  // independent oracle at a point: direct product of normal pdfs
  std::vector<double> at{0.5, 1.0, -0.3};
  double oracle = 0.0;
  for (int k = 0; k < 2; ++k) {
    double term = post.weights[k];
    for (int p = 0; p < 3; ++p) {
      double z = (at[p] - post.means[k][p]) / post.scales[k][p];
      term *= std::exp(-0.5 * z * z) / (post.scales[k][p] * std::sqrt(2.0 * 3.141592653589793));
    }
    oracle += term;
  }
  CHECK(post.density(at) == doctest::Approx(oracle).epsilon(1e-12));

  double lo[3], hi[3];
  for (int p = 0; p < 3; ++p) {
    lo[p] = 1e300;
    hi[p] = -1e300;
    for (int k = 0; k < 2; ++k) {
      lo[p] = std::min(lo[p], post.means[k][p] - 8.0 * post.scales[k][p]);
      hi[p] = std::max(hi[p], post.means[k][p] + 8.0 * post.scales[k][p]);
    }
  }
  const int n = 96;
  double mass = 0.0;
  std::vector<double> theta(3);
  for (int i = 0; i < n; ++i) {
    theta[0] = lo[0] + (i + 0.5) * (hi[0] - lo[0]) / n;
    for (int j = 0; j < n; ++j) {
      theta[1] = lo[1] + (j + 0.5) * (hi[1] - lo[1]) / n;
      for (int k = 0; k < n; ++k) {
        theta[2] = lo[2] + (k + 0.5) * (hi[2] - lo[2]) / n;
        mass += post.density(theta);
      }
    }
  }
  mass *= (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]) / (double(n) * n * n);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-2));

  CHECK_THROWS_AS(post.log_density({0.0}), ValidationError);
}

TEST_CASE("mode ascent dominates component means") {
  Posterior post;
  post.prior = granular_prior();
  post.weights = {0.7, 0.3};
  post.means = {{0.2, -10.0, 0.3}, {0.8, -4.0, 0.9}};
  post.scales = {{0.01, 0.1, 0.01}, {0.01, 0.1, 0.01}};

  auto mode = posterior_mode(post);
  for (int p = 0; p < 3; ++p)
    CHECK(mode[p] == doctest::Approx(post.means[0][p]).epsilon(1e-6));
  double md = post.log_density(mode);
  CHECK(md >= post.log_density(post.means[0]) - 1e-9);
  CHECK(md >= post.log_density(post.means[1]) - 1e-9);

  auto gp = point_estimate(post);
  CHECK(gp.mu_s == doctest::Approx(0.2).epsilon(1e-4));
  CHECK(gp.mu_r == doctest::Approx(std::exp(-10.0)).epsilon(1e-3));
  CHECK(gp.e == doctest::Approx(0.3).epsilon(1e-4));

  // dominant-by-density component: heavier weight but much wider scales
  Posterior spread = post;
  spread.weights = {0.55, 0.45};
  spread.scales = {{1.0, 3.0, 1.0}, {0.01, 0.1, 0.01}};
  auto mode2 = posterior_mode(spread);
  CHECK(spread.log_density(mode2) >= spread.log_density(spread.means[0]) - 1e-9);
  CHECK(spread.log_density(mode2) >= spread.log_density(spread.means[1]) - 1e-9);

  Posterior two_d;
  two_d.prior = Prior{{"a"}, {0.0}, {1.0}};
  two_d.weights = {1.0};
  two_d.means = {{0.5}};
  two_d.scales = {{0.1}};
  CHECK_THROWS_AS(point_estimate(two_d), ValidationError);
  CHECK(posterior_mode(two_d) == two_d.means[0]);
}

TEST_CASE("model serialization round-trips") {
  auto data = three_param_set(60, 17);
  TrainSchedule sched;
  sched.seed = 2;
  sched.max_epochs = 300;
  auto model = train(data, 2, RffOptions{64}, sched);
  model.provenance = Json{{"dataset_digest", "abc123"}};

  Json j = model_to_json(model);
  auto loaded = model_from_json(j);
  CHECK(loaded.weights == model.weights);
  CHECK(loaded.biases == model.biases);
  CHECK(loaded.rff.phase == model.rff.phase);
  CHECK(loaded.provenance["dataset_digest"] == "abc123");

  auto p1 = predict_posterior(model, data.stats[3]);
  auto p2 = predict_posterior(loaded, data.stats[3]);
  CHECK(p1.weights == p2.weights);
  CHECK(p1.means == p2.means);
  CHECK(p1.scales == p2.scales);

  Json bad = j;
  bad["format"] = "something-else";
  CHECK_THROWS_AS(model_from_json(bad), DataError);
  bad = j;
  bad["version"] = 99;
  CHECK_THROWS_AS(model_from_json(bad), DataError);
  // statistic-length mismatch between constants and feature map
  bad = j;
  bad["stat_mean"] = Json::array({0.0, 0.0});
  CHECK_THROWS_AS(model_from_json(bad), DataError);
  bad = j;
  bad["weights"] = Json::array({1.0, 2.0});
  CHECK_THROWS_AS(model_from_json(bad), DataError);

  // file round-trip through a temp path
  auto path = std::filesystem::temp_directory_path() / "granulab_model_test.json";
  save_model(path, model);
  auto from_file = load_model(path);
  CHECK(from_file.weights == model.weights);
  std::filesystem::remove(path);
}

TEST_CASE("estimate error shrinks as the training set grows") {
  Prior prior{{"mu_s"}, {0.01}, {1.0}};
  std::uint64_t base = 3;
  auto test_thetas = sample_prior(prior, 200, base + 900);
  Rng test_noise(base + 901);
  std::vector<std::vector<double>> test_stats(200);
  for (int i = 0; i < 200; ++i) test_stats[i] = wiggly_stats(test_thetas[i][0], test_noise);

  std::vector<double> errs;
  for (std::size_t n : {100, 500, 1000}) {
    auto thetas = sample_prior(prior, n, base);
    Rng noise(base + 1);
    std::vector<std::vector<double>> stats(n);
    for (std::size_t i = 0; i < n; ++i) stats[i] = wiggly_stats(thetas[i][0], noise);
    auto data = make_training_set(thetas, stats, prior);
    TrainSchedule sched;
    sched.seed = base + 2;
    auto model = train(data, 1, RffOptions{}, sched);
    double err = 0.0;
    for (int i = 0; i < 200; ++i) {
      auto post = predict_posterior(model, test_stats[i]);
      err += std::fabs(posterior_mode(post)[0] - test_thetas[i][0]) / 200.0;
    }
    errs.push_back(err);
  }
  CHECK(errs[0] > errs[1]);
  CHECK(errs[1] > errs[2]);
}
