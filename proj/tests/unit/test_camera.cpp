#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "granulab/camera/camera.hpp"
#include "granulab/camera/depth_io.hpp"
#include "granulab/core/error.hpp"
#include "granulab/core/file_io.hpp"
#include "granulab/core/rng.hpp"

using namespace granulab;
using namespace granulab::camera;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRadius = 0.002;

sim::SceneState scene_of(std::vector<Vec3> positions) {
  sim::SceneState s;
  s.velocities.assign(positions.size(), {});
  s.angular_velocities.assign(positions.size(), {});
  s.positions = std::move(positions);
  return s;
}

// Independent hit oracle: normalized-direction geometric construction
// instead of the renderer's quadratic in ray parameter.
double oracle_depth(int u, int v, const Vec3& c, double radius,
                    const CameraConfig& cam) {
  double dx = (u - cam.cx) / cam.fx;
  double dy = (v - cam.cy) / cam.fy;
  double len = std::sqrt(dx * dx + dy * dy + 1.0);
  double ux = dx / len, uy = dy / len, uz = -1.0 / len;
  double lx = c.x, ly = c.y, lz = c.z - cam.camera_height;
  double tca = lx * ux + ly * uy + lz * uz;
  double d2 = lx * lx + ly * ly + lz * lz - tca * tca;
  if (d2 > radius * radius) return cam.camera_height;
  double thc = std::sqrt(radius * radius - d2);
  double t = tca - thc;
  if (t <= 0.0) return cam.camera_height;
  return std::min(cam.camera_height, -t * uz);
}

bool same_pixels(const DepthImage& a, const DepthImage& b) {
  return a.width == b.width && a.height == b.height &&
         std::memcmp(a.depth.data(), b.depth.data(),
                     a.depth.size() * sizeof(float)) == 0;
}

DepthImage constant_image(int w, int h, float value) {
  DepthImage img;
  img.width = w;
  img.height = h;
  img.depth.assign(static_cast<std::size_t>(w) * h, value);
  img.config.width = w;
  img.config.height = h;
  return img;
}

std::filesystem::path temp_path(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("empty scene renders pure ground") {
  CameraConfig cam;
  DepthImage img = render_depth(scene_of({}), kRadius, cam);
  CHECK(img.width == 320);
  CHECK(img.height == 320);
  for (float v : img.depth) CHECK(v == static_cast<float>(0.29));
  CHECK(img.config.fx == 160.0);
}

TEST_CASE("single grain depth matches the geometric hit oracle") {
  CameraConfig cam;
  Vec3 c{0.0, 0.0, kRadius};
  DepthImage img = render_depth(scene_of({c}), kRadius, cam);
  for (int v = 150; v < 170; ++v)
    for (int u = 150; u < 170; ++u)
      CHECK(std::abs(img.at(u, v) - oracle_depth(u, v, c, kRadius, cam)) < 1e-7);

  // The apex reads camera height minus the grain diameter, up to the ray
  // quantization: the nearest pixel center sits half a pixel off-axis in
  // both directions, which costs just under half a millimeter of cap.
  double apex = 0.29 - 2.0 * kRadius;
  CHECK(std::abs(img.at(160, 160) - apex) < 6e-4);
  CHECK(img.at(160, 160) > apex);

  // Off the silhouette the ground shows through.
  CHECK(img.at(200, 160) == static_cast<float>(0.29));
}

TEST_CASE("grain outside the footprint leaves pure ground") {
  CameraConfig cam;
  DepthImage empty = render_depth(scene_of({}), kRadius, cam);
  DepthImage img = render_depth(scene_of({{0.5, 0.5, kRadius}}), kRadius, cam);
  CHECK(same_pixels(empty, img));
}

TEST_CASE("tiled renderer matches the brute-force reference bit for bit") {
  CameraConfig cam;
  Rng rng(2024);
  std::vector<Vec3> centers;
  for (int i = 0; i < 150; ++i)
    centers.push_back({rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                       rng.uniform(kRadius, 0.05)});
  // Edge and corner straddlers plus a deep stack exercise clipping and
  // occlusion the same way in both paths.
  centers.push_back({0.29, 0.0, kRadius});
  centers.push_back({-0.29, 0.29, kRadius});
  centers.push_back({0.01, 0.01, kRadius});
  centers.push_back({0.01, 0.01, 3 * kRadius});
  sim::SceneState s = scene_of(std::move(centers));
  DepthImage fast = render_depth(s, kRadius, cam);
  DepthImage slow = render_depth_reference(s, kRadius, cam);
  CHECK(same_pixels(fast, slow));
}

TEST_CASE("downsample pools block means and rescales intrinsics") {
  DepthImage img = constant_image(2, 2, 0.29f);
  img.at(0, 1) = 0.27f;
  img.at(1, 1) = 0.27f;
  DepthImage out = downsample(img, 2);
  CHECK(out.width == 1);
  CHECK(out.height == 1);
  CHECK(out.at(0, 0) == doctest::Approx(0.28).epsilon(1e-6));

  DepthImage flat = constant_image(32, 32, 0.123f);
  DepthImage pooled = downsample(flat, 4);
  for (float v : pooled.depth) CHECK(v == 0.123f);

  CameraConfig cam;
  DepthImage native = render_depth(scene_of({{0, 0, kRadius}}), kRadius, cam);
  CHECK(same_pixels(downsample(native, 1), native));
  DepthImage grid = downsample(native, 20);
  CHECK(grid.width == 16);
  CHECK(grid.config.fx == doctest::Approx(8.0));
  CHECK(grid.config.cx == doctest::Approx(7.5));
  CHECK(grid.config.downsample_factor == 1);
  CHECK_THROWS_AS(downsample(native, 3), ValidationError);
}

TEST_CASE("downsampled pixels back-project onto the same rays") {
  // A pooled pixel's center ray through the rescaled intrinsics must match
  // the mean ray of its native block.
  CameraConfig cam;
  int n = 20;
  double cx_down = (cam.cx - 0.5 * (n - 1)) / n;
  double fx_down = cam.fx / n;
  for (int block = 0; block < 16; ++block) {
    double mean_slope = 0.0;
    for (int i = 0; i < n; ++i) mean_slope += (block * n + i - cam.cx) / cam.fx;
    mean_slope /= n;
    CHECK((block - cx_down) / fx_down == doctest::Approx(mean_slope).epsilon(1e-12));
  }
}

TEST_CASE("blur is normalized, separable, and identity at sigma zero") {
  CameraConfig cam;
  DepthImage img = render_depth(scene_of({{0, 0, kRadius}}), kRadius, cam);
  CHECK(same_pixels(apply_blur(img, 0.0), img));

  DepthImage flat = constant_image(64, 64, 0.29f);
  DepthImage blurred_flat = apply_blur(flat, 2.0);
  for (float v : blurred_flat.depth) CHECK(std::abs(v - 0.29f) < 1e-7f);

  // Impulse response: the center pixel carries the squared central kernel
  // weight, near the continuous value 1/(2 pi sigma^2).
  double sigma = 2.0;
  int radius = static_cast<int>(std::ceil(3.0 * sigma));
  double sum = 0.0;
  std::vector<double> w;
  for (int i = -radius; i <= radius; ++i) {
    w.push_back(std::exp(-0.5 * i * i / (sigma * sigma)));
    sum += w.back();
  }
  for (double& x : w) x /= sum;
  double w0 = w[static_cast<std::size_t>(radius)];
  DepthImage impulse = constant_image(41, 41, 0.0f);
  impulse.at(20, 20) = 1.0f;
  DepthImage response = apply_blur(impulse, sigma);
  CHECK(response.at(20, 20) == doctest::Approx(w0 * w0).epsilon(1e-6));
  CHECK(std::abs(response.at(20, 20) - 1.0 / (2.0 * kPi * sigma * sigma)) <
        0.01 / (2.0 * kPi * sigma * sigma));

  // Full direct 2D convolution oracle with mirrored borders.
  Rng rng(7);
  DepthImage small = constant_image(24, 24, 0.0f);
  for (float& v : small.depth) v = static_cast<float>(0.29 + 0.01 * rng.normal());
  double sig = 1.5;
  int r2 = static_cast<int>(std::ceil(3.0 * sig));
  std::vector<double> k;
  double ksum = 0.0;
  for (int i = -r2; i <= r2; ++i) {
    k.push_back(std::exp(-0.5 * i * i / (sig * sig)));
    ksum += k.back();
  }
  for (double& x : k) x /= ksum;
  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) {
      if (i < 0) i = -i - 1;
      if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
  };
  DepthImage got = apply_blur(small, sig);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) {
      double direct = 0.0;
      for (int dy = -r2; dy <= r2; ++dy)
        for (int dx = -r2; dx <= r2; ++dx)
          direct += k[static_cast<std::size_t>(dy + r2)] * k[static_cast<std::size_t>(dx + r2)] *
                    small.at(reflect(x + dx, 24), reflect(y + dy, 24));
      CHECK(got.at(x, y) == doctest::Approx(direct).epsilon(1e-6));
    }
}

TEST_CASE("blur preserves interior mean depth") {
  CameraConfig cam;
  DepthImage img = render_depth(scene_of({{0, 0, kRadius}, {0.01, 0.0, kRadius}}),
                                kRadius, cam);
  DepthImage blurred = apply_blur(img, 2.0);
  int margin = 6;
  double before = 0.0, after = 0.0;
  long count = 0;
  for (int y = margin; y < img.height - margin; ++y)
    for (int x = margin; x < img.width - margin; ++x) {
      before += img.at(x, y);
      after += blurred.at(x, y);
      ++count;
    }
  CHECK(std::abs(after / count - before / count) < 1e-6);
}

TEST_CASE("pixel noise is seeded and has the right spread") {
  DepthImage flat = constant_image(320, 320, 0.29f);
  CHECK(same_pixels(apply_pixel_noise(flat, 0.0, 5), flat));
  DepthImage a = apply_pixel_noise(flat, 0.002, 5);
  DepthImage b = apply_pixel_noise(flat, 0.002, 5);
  DepthImage c = apply_pixel_noise(flat, 0.002, 6);
  CHECK(same_pixels(a, b));
  CHECK(!same_pixels(a, c));

  double mean = 0.0;
  for (float v : a.depth) mean += v;
  mean /= static_cast<double>(a.depth.size());
  double var = 0.0;
  for (float v : a.depth) var += (v - mean) * (v - mean);
  var /= static_cast<double>(a.depth.size());
  CHECK(std::abs(std::sqrt(var) - 0.002) < 0.05 * 0.002);
  CHECK(std::abs(mean - 0.29) < 5.0 * 0.002 / std::sqrt(320.0 * 320.0));
}

TEST_CASE("noise config applies blur before pixel noise") {
  CameraConfig cam;
  DepthImage img = render_depth(scene_of({{0, 0, kRadius}}), kRadius, cam);
  NoiseConfig noise{2.0, 0.001, 42};
  DepthImage got = apply_noise(img, noise);
  DepthImage want = apply_pixel_noise(apply_blur(img, 2.0), 0.001, 42);
  CHECK(same_pixels(got, want));
  CHECK_THROWS_AS(validate(NoiseConfig{-1.0, 0.0, 0}), ValidationError);
}

TEST_CASE("depth image round-trips through f32 plus sidecar") {
  CameraConfig cam;
  cam.width = 64;
  cam.height = 64;
  cam.fx = cam.fy = 32.0;
  cam.cx = cam.cy = 31.5;
  cam.downsample_factor = 4;
  DepthImage img = render_depth(scene_of({{0, 0, kRadius}}), kRadius, cam);
  auto path = temp_path("granulab_depth_test.f32");
  save_depth(path, img);
  DepthImage back = load_depth(path);
  CHECK(same_pixels(img, back));
  CHECK(back.config.camera_height == img.config.camera_height);
  CHECK(back.config.fx == img.config.fx);
  CHECK(back.config.cx == img.config.cx);
  CHECK(back.config.downsample_factor == 4);

  // Truncated payload is rejected against the sidecar dimensions.
  std::string raw = read_file(path);
  write_file_atomic(path, std::string_view(raw).substr(0, raw.size() - 4));
  CHECK_THROWS_AS(load_depth(path), DataError);
  CHECK_THROWS_AS(load_depth(temp_path("no_such_depth.f32")), IoError);
}

TEST_CASE("sixteen-bit PGM import reads millimeters") {
  auto path = temp_path("granulab_depth_test.pgm");
  std::string body = "P5\n# recorded frame\n4 2\n65535\n";
  unsigned values[8] = {0, 290, 1000, 65535, 286, 287, 288, 289};
  for (unsigned v : values) {
    body.push_back(static_cast<char>(v >> 8));
    body.push_back(static_cast<char>(v & 0xff));
  }
  write_file_atomic(path, body);
  CameraConfig cam;
  DepthImage img = import_depth_pgm(path, cam);
  CHECK(img.width == 4);
  CHECK(img.height == 2);
  for (int i = 0; i < 8; ++i)
    CHECK(img.depth[static_cast<std::size_t>(i)] ==
          doctest::Approx(values[i] * 1e-3).epsilon(1e-6));
  CHECK(img.config.fx == cam.fx);

  write_file_atomic(path, std::string("P2\n4 2\n65535\n"));
  CHECK_THROWS_AS(import_depth_pgm(path, cam), DataError);
  write_file_atomic(path, std::string("P5\n4 2\n255\n") + std::string(8, '\0'));
  CHECK_THROWS_AS(import_depth_pgm(path, cam), DataError);
  std::string shortbody = body.substr(0, body.size() - 3);
  write_file_atomic(path, shortbody);
  CHECK_THROWS_AS(import_depth_pgm(path, cam), DataError);
}

TEST_CASE("rendering is consistent across native resolutions") {
  Rng rng(99);
  std::vector<Vec3> centers;
  for (int i = 0; i < 30; ++i) {
    double ang = rng.uniform(0.0, 2.0 * kPi);
    double r = 0.05 * std::sqrt(rng.uniform01());
    centers.push_back({r * std::cos(ang), r * std::sin(ang),
                       rng.uniform(kRadius, 3.0 * kRadius)});
  }
  sim::SceneState s = scene_of(std::move(centers));

  CameraConfig lo;
  DepthImage grid_lo = downsample(render_depth(s, kRadius, lo), 20);

  CameraConfig hi;
  hi.width = hi.height = 640;
  hi.fx = hi.fy = 320.0;
  hi.cx = hi.cy = 319.5;
  hi.downsample_factor = 40;
  DepthImage grid_hi = downsample(render_depth(s, kRadius, hi), 40);

  REQUIRE(grid_lo.width == grid_hi.width);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid_lo.depth.size(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(grid_lo.depth[i]) - grid_hi.depth[i]));
  CHECK(worst < 0.5 * kRadius);
}
