#include "granulab/camera/camera.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "granulab/core/error.hpp"
#include "granulab/core/parallel.hpp"
#include "granulab/core/rng.hpp"

namespace granulab::camera {

void validate(const CameraConfig& cam) {
  if (cam.width < 1 || cam.height < 1)
    throw ValidationError("camera resolution must be at least 1x1");
  if (!(cam.fx > 0.0) || !(cam.fy > 0.0))
    throw ValidationError("focal lengths must be positive");
  if (!(cam.camera_height > 0.0))
    throw ValidationError("camera_height must be positive");
  if (cam.downsample_factor < 1)
    throw ValidationError("downsample_factor must be at least 1");
  if (cam.width % cam.downsample_factor != 0 || cam.height % cam.downsample_factor != 0)
    throw ValidationError("downsample_factor must divide the resolution");
}

void validate(const NoiseConfig& noise) {
  if (!(noise.blur_sigma >= 0.0)) throw ValidationError("blur_sigma must be >= 0");
  if (!(noise.pixel_sigma >= 0.0)) throw ValidationError("pixel_sigma must be >= 0");
}

namespace {

// Depth of the near ray-sphere intersection for the ray from (0, 0, h)
// with direction (sx, sy, -1), or +inf on a miss. With unit downward
// z-slope the ray parameter is itself the depth from the camera plane.
inline double hit_depth(double sx, double sy, double h, const Vec3& c, double radius) {
  double ox = -c.x;
  double oy = -c.y;
  double oz = h - c.z;
  double a = sx * sx + sy * sy + 1.0;
  double b = 2.0 * (sx * ox + sy * oy - oz);
  double k = ox * ox + oy * oy + oz * oz - radius * radius;
  double disc = b * b - 4.0 * a * k;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  double t = (-b - std::sqrt(disc)) / (2.0 * a);
  if (t <= 0.0) return std::numeric_limits<double>::infinity();
  return t;
}

struct PixelRect {
  int x0, x1, y0, y1;  // half-open
  bool empty() const { return x0 >= x1 || y0 >= y1; }
};

// Conservative pixel bounds of a sphere's silhouette. Any ray that meets
// the sphere does so at a depth within [top, bottom], and the slope of a
// hitting ray is a ratio x/t with x in the sphere's horizontal extent, so
// the extreme slopes sit at the corners of that rectangle.
PixelRect sphere_pixel_bounds(const Vec3& c, double radius, const CameraConfig& cam) {
  double t0 = cam.camera_height - c.z - radius;
  double t1 = cam.camera_height - c.z + radius;
  if (!(t0 > 0.0)) return {0, cam.width, 0, cam.height};
  auto slope_range = [&](double lo, double hi, double& smin, double& smax) {
    smin = std::min(std::min(lo / t0, lo / t1), std::min(hi / t0, hi / t1));
    smax = std::max(std::max(lo / t0, lo / t1), std::max(hi / t0, hi / t1));
  };
  double sx0, sx1, sy0, sy1;
  slope_range(c.x - radius, c.x + radius, sx0, sx1);
  slope_range(c.y - radius, c.y + radius, sy0, sy1);
  PixelRect r;
  r.x0 = std::max(0, static_cast<int>(std::floor(cam.cx + cam.fx * sx0)) - 1);
  r.x1 = std::min(cam.width, static_cast<int>(std::ceil(cam.cx + cam.fx * sx1)) + 2);
  r.y0 = std::max(0, static_cast<int>(std::floor(cam.cy + cam.fy * sy0)) - 1);
  r.y1 = std::min(cam.height, static_cast<int>(std::ceil(cam.cy + cam.fy * sy1)) + 2);
  return r;
}

DepthImage ground_image(const CameraConfig& cam) {
  DepthImage img;
  img.width = cam.width;
  img.height = cam.height;
  img.config = cam;
  img.depth.assign(static_cast<std::size_t>(cam.width) * cam.height,
                   static_cast<float>(cam.camera_height));
  return img;
}

void check_radius(double radius) {
  if (!(radius > 0.0)) throw ValidationError("grain radius must be positive");
}

constexpr int kTile = 16;

}  // namespace

DepthImage render_depth(const sim::SceneState& state, double radius,
                        const CameraConfig& cam) {
  validate(cam);
  check_radius(radius);
  DepthImage img = ground_image(cam);
  if (state.positions.empty()) return img;

  int tiles_x = (cam.width + kTile - 1) / kTile;
  int tiles_y = (cam.height + kTile - 1) / kTile;
  std::vector<std::vector<int>> tile_spheres(static_cast<std::size_t>(tiles_x) * tiles_y);
  for (std::size_t i = 0; i < state.positions.size(); ++i) {
    PixelRect r = sphere_pixel_bounds(state.positions[i], radius, cam);
    if (r.empty()) continue;
    for (int ty = r.y0 / kTile; ty <= (r.y1 - 1) / kTile; ++ty)
      for (int tx = r.x0 / kTile; tx <= (r.x1 - 1) / kTile; ++tx)
        tile_spheres[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(static_cast<int>(i));
  }

  parallel_for(tile_spheres.size(), [&](std::size_t tile) {
    const std::vector<int>& spheres = tile_spheres[tile];
    if (spheres.empty()) return;
    int tx = static_cast<int>(tile) % tiles_x;
    int ty = static_cast<int>(tile) / tiles_x;
    int x1 = std::min(cam.width, (tx + 1) * kTile);
    int y1 = std::min(cam.height, (ty + 1) * kTile);
    for (int y = ty * kTile; y < y1; ++y) {
      double sy = (y - cam.cy) / cam.fy;
      for (int x = tx * kTile; x < x1; ++x) {
        double sx = (x - cam.cx) / cam.fx;
        double best = cam.camera_height;
        for (int s : spheres)
          best = std::min(best, hit_depth(sx, sy, cam.camera_height,
                                          state.positions[s], radius));
        img.at(x, y) = static_cast<float>(best);
      }
    }
  });
  return img;
}

DepthImage render_depth_reference(const sim::SceneState& state, double radius,
                                  const CameraConfig& cam) {
  validate(cam);
  check_radius(radius);
  DepthImage img = ground_image(cam);
  for (int y = 0; y < cam.height; ++y) {
    double sy = (y - cam.cy) / cam.fy;
    for (int x = 0; x < cam.width; ++x) {
      double sx = (x - cam.cx) / cam.fx;
      double best = cam.camera_height;
      for (const Vec3& c : state.positions)
        best = std::min(best, hit_depth(sx, sy, cam.camera_height, c, radius));
      img.at(x, y) = static_cast<float>(best);
    }
  }
  return img;
}

DepthImage downsample(const DepthImage& img, int n) {
  if (n < 1) throw ValidationError("downsample factor must be at least 1");
  if (img.width % n != 0 || img.height % n != 0)
    throw ValidationError("downsample factor must divide the image dimensions");
  DepthImage out;
  out.width = img.width / n;
  out.height = img.height / n;
  out.depth.resize(static_cast<std::size_t>(out.width) * out.height);
  out.config = img.config;
  out.config.width = out.width;
  out.config.height = out.height;
  out.config.fx = img.config.fx / n;
  out.config.fy = img.config.fy / n;
  out.config.cx = (img.config.cx - 0.5 * (n - 1)) / n;
  out.config.cy = (img.config.cy - 0.5 * (n - 1)) / n;
  out.config.downsample_factor = std::max(1, img.config.downsample_factor / n);
  double inv = 1.0 / (static_cast<double>(n) * n);
  parallel_for(static_cast<std::size_t>(out.height), [&](std::size_t oy) {
    for (int ox = 0; ox < out.width; ++ox) {
      double sum = 0.0;
      for (int dy = 0; dy < n; ++dy)
        for (int dx = 0; dx < n; ++dx)
          sum += img.at(ox * n + dx, static_cast<int>(oy) * n + dy);
      out.at(ox, static_cast<int>(oy)) = static_cast<float>(sum * inv);
    }
  });
  return out;
}

namespace {

// Mirror an index into [0, n), repeating the edge sample (-1 -> 0, n -> n-1).
inline int reflect_index(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

std::vector<double> gaussian_kernel(double sigma) {
  int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    w[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += w[static_cast<std::size_t>(i + radius)];
  }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

DepthImage apply_blur(const DepthImage& img, double blur_sigma) {
  if (!(blur_sigma >= 0.0)) throw ValidationError("blur_sigma must be >= 0");
  if (blur_sigma == 0.0) return img;
  std::vector<double> w = gaussian_kernel(blur_sigma);
  int radius = (static_cast<int>(w.size()) - 1) / 2;

  // Horizontal pass kept in double so the vertical pass rounds only once.
  std::vector<double> tmp(img.depth.size());
  parallel_for(static_cast<std::size_t>(img.height), [&](std::size_t y) {
    for (int x = 0; x < img.width; ++x) {
      double sum = 0.0;
      for (int i = -radius; i <= radius; ++i)
        sum += w[static_cast<std::size_t>(i + radius)] *
               img.at(reflect_index(x + i, img.width), static_cast<int>(y));
      tmp[y * img.width + x] = sum;
    }
  });

  DepthImage out = img;
  parallel_for(static_cast<std::size_t>(img.height), [&](std::size_t y) {
    for (int x = 0; x < img.width; ++x) {
      double sum = 0.0;
      for (int i = -radius; i <= radius; ++i)
        sum += w[static_cast<std::size_t>(i + radius)] *
               tmp[static_cast<std::size_t>(reflect_index(static_cast<int>(y) + i, img.height)) *
                       img.width + x];
      out.at(x, static_cast<int>(y)) = static_cast<float>(sum);
    }
  });
  return out;
}

DepthImage apply_pixel_noise(const DepthImage& img, double pixel_sigma,
                             std::uint64_t seed) {
  if (!(pixel_sigma >= 0.0)) throw ValidationError("pixel_sigma must be >= 0");
  if (pixel_sigma == 0.0) return img;
  DepthImage out = img;
  Rng rng(seed);
  for (float& v : out.depth) v = static_cast<float>(v + pixel_sigma * rng.normal());
  return out;
}

DepthImage apply_noise(const DepthImage& img, const NoiseConfig& noise) {
  validate(noise);
  if (noise.blur_sigma > 0.0) {
    DepthImage blurred = apply_blur(img, noise.blur_sigma);
    return apply_pixel_noise(blurred, noise.pixel_sigma, noise.seed);
  }
  return apply_pixel_noise(img, noise.pixel_sigma, noise.seed);
}

}  // namespace granulab::camera
