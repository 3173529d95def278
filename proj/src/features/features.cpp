#include "granulab/features/features.hpp"

#include <algorithm>
#include <cmath>

#include "granulab/core/error.hpp"
#include "granulab/core/stats_util.hpp"

namespace granulab::features {

const std::array<const char*, kStatCount>& stat_names() {
  static const std::array<const char*, kStatCount> names = {
      "z_max",  "z_mean", "z_std",  "r_max",  "r_mean",  "x_std",
      "y_std",  "r_std",  "x_iqr",  "y_iqr",  "r_iqr",   "r_kurt",
      "rz_dcor", "chi_df", "chi_b",  "chi_A"};
  return names;
}

std::vector<std::int32_t> segment(const DepthImage& img, double grain_radius) {
  if (!(grain_radius > 0.0)) throw ValidationError("grain radius must be positive");
  float threshold = static_cast<float>(img.config.camera_height - 0.5 * grain_radius);
  std::vector<std::int32_t> pixels;
  for (std::size_t i = 0; i < img.depth.size(); ++i)
    if (img.depth[i] < threshold) pixels.push_back(static_cast<std::int32_t>(i));
  if (pixels.empty())
    throw EmptySegmentationError("no pixels below the grain depth threshold");
  return pixels;
}

std::vector<std::int32_t> segment(const DepthImage& img,
                                  const std::vector<std::uint8_t>& mask) {
  if (mask.size() != img.depth.size())
    throw ValidationError("mask size does not match the image");
  std::vector<std::int32_t> pixels;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) pixels.push_back(static_cast<std::int32_t>(i));
  if (pixels.empty()) throw EmptySegmentationError("mask selects no pixels");
  return pixels;
}

std::vector<Vec3> reproject(const std::vector<std::int32_t>& pixels,
                            const DepthImage& img) {
  const camera::CameraConfig& cam = img.config;
  std::vector<Vec3> points;
  points.reserve(pixels.size());
  for (std::int32_t idx : pixels) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= img.depth.size())
      throw ValidationError("pixel index out of range");
    int u = idx % img.width;
    int v = idx / img.width;
    double d = img.depth[static_cast<std::size_t>(idx)];
    points.push_back({d * (u - cam.cx) / cam.fx, d * (v - cam.cy) / cam.fy, d});
  }
  return points;
}

namespace {

// Eigenvalues and eigenvectors of a symmetric 3x3 matrix by cyclic Jacobi
// rotations. Columns of v are the eigenvectors.
void jacobi3(double a[3][3], double w[3], double v[3][3]) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) v[i][j] = i == j ? 1.0 : 0.0;
  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
    if (off == 0.0) break;
    for (int p = 0; p < 2; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (a[p][q] == 0.0) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        double app = a[p][p], aqq = a[q][q], apq = a[p][q];
        a[p][p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
        a[q][q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
        a[p][q] = a[q][p] = 0.0;
        int r = 3 - p - q;
        double arp = a[r][p], arq = a[r][q];
        a[r][p] = a[p][r] = c * arp - s * arq;
        a[r][q] = a[q][r] = s * arp + c * arq;
        for (int i = 0; i < 3; ++i) {
          double vip = v[i][p], viq = v[i][q];
          v[i][p] = c * vip - s * viq;
          v[i][q] = s * vip + c * viq;
        }
      }
  }
  for (int i = 0; i < 3; ++i) w[i] = a[i][i];
}

struct Plane {
  Vec3 centroid;
  Vec3 normal;  // unit, oriented toward increasing depth
};

Plane fit_plane(const std::vector<Vec3>& pts) {
  Vec3 c{};
  for (const Vec3& p : pts) c += p;
  c *= 1.0 / static_cast<double>(pts.size());
  double cov[3][3] = {};
  for (const Vec3& p : pts) {
    Vec3 d = p - c;
    cov[0][0] += d.x * d.x;
    cov[0][1] += d.x * d.y;
    cov[0][2] += d.x * d.z;
    cov[1][1] += d.y * d.y;
    cov[1][2] += d.y * d.z;
    cov[2][2] += d.z * d.z;
  }
  cov[1][0] = cov[0][1];
  cov[2][0] = cov[0][2];
  cov[2][1] = cov[1][2];
  double w[3], v[3][3];
  jacobi3(cov, w, v);
  int lo = 0, hi = 0;
  for (int i = 1; i < 3; ++i) {
    if (w[i] < w[lo]) lo = i;
    if (w[i] > w[hi]) hi = i;
  }
  int mid = 3 - lo - hi;
  if (lo == hi || !(w[mid] > 1e-12 * std::max(w[hi], 1e-300)))
    throw DataError("ground points are collinear");
  Vec3 n{v[0][lo], v[1][lo], v[2][lo]};
  if (n.z < 0.0) n *= -1.0;
  return {c, n};
}

}  // namespace

GrainPointCloud level_ground(const std::vector<Vec3>& grains_cam,
                             const std::vector<Vec3>& ground_cam) {
  if (ground_cam.size() < 3)
    throw DataError("plane fit needs at least 3 ground points");
  Plane plane = fit_plane(ground_cam);

  // One rejection pass: drop points further than two sigma off the plane.
  std::vector<double> res(ground_cam.size());
  double var = 0.0;
  for (std::size_t i = 0; i < ground_cam.size(); ++i) {
    res[i] = dot(plane.normal, ground_cam[i] - plane.centroid);
    var += res[i] * res[i];
  }
  double sigma = std::sqrt(var / static_cast<double>(ground_cam.size()));
  std::vector<Vec3> kept;
  for (std::size_t i = 0; i < ground_cam.size(); ++i)
    if (std::abs(res[i]) <= 2.0 * sigma) kept.push_back(ground_cam[i]);
  if (kept.size() >= 3) plane = fit_plane(kept);

  Vec3 e1 = normalized_or(Vec3{1, 0, 0} - plane.normal * plane.normal.x,
                          normalized_or(Vec3{0, 1, 0} - plane.normal * plane.normal.y,
                                        Vec3{1, 0, 0}));
  Vec3 e2 = cross(e1, plane.normal);
  std::vector<Vec3> world;
  world.reserve(grains_cam.size());
  for (const Vec3& p : grains_cam) {
    Vec3 d = p - plane.centroid;
    world.push_back({dot(d, e1), dot(d, e2), -dot(d, plane.normal)});
  }
  return finalize_cloud(std::move(world));
}

GrainPointCloud finalize_cloud(std::vector<Vec3> points_world) {
  if (points_world.empty()) throw ValidationError("empty point cloud");
  double mx = 0.0, my = 0.0;
  for (const Vec3& p : points_world) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(points_world.size());
  my /= static_cast<double>(points_world.size());
  GrainPointCloud cloud;
  cloud.points = std::move(points_world);
  cloud.r.reserve(cloud.points.size());
  cloud.z.reserve(cloud.points.size());
  for (Vec3& p : cloud.points) {
    p.x -= mx;
    p.y -= my;
    cloud.r.push_back(std::hypot(p.x, p.y));
    cloud.z.push_back(p.z);
  }
  return cloud;
}

SummaryStats stats_from_cloud(const GrainPointCloud& cloud) {
  std::size_t m = cloud.points.size();
  if (m == 0 || cloud.r.size() != m || cloud.z.size() != m)
    throw ValidationError("malformed point cloud");
  std::vector<double> x(m), y(m);
  for (std::size_t i = 0; i < m; ++i) {
    x[i] = cloud.points[i].x;
    y[i] = cloud.points[i].y;
  }
  std::vector<double> xs = x, ys = y, rs = cloud.r;
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  std::sort(rs.begin(), rs.end());

  ChiFit chi = fit_chi(cloud.r);
  SummaryStats out;
  out.v[0] = max_of(cloud.z);
  out.v[1] = mean_of(cloud.z);
  out.v[2] = stddev_pop(cloud.z);
  out.v[3] = max_of(cloud.r);
  out.v[4] = mean_of(cloud.r);
  out.v[5] = stddev_pop(x);
  out.v[6] = stddev_pop(y);
  out.v[7] = stddev_pop(cloud.r);
  out.v[8] = iqr_sorted(xs);
  out.v[9] = iqr_sorted(ys);
  out.v[10] = iqr_sorted(rs);
  out.v[11] = kurtosis_of(cloud.r);
  out.v[12] = distance_correlation(cloud.r, cloud.z);
  out.v[13] = chi.df;
  out.v[14] = chi.b;
  out.v[15] = chi.A;
  out.chi_degenerate = chi.degenerate;
  return out;
}

SummaryStats summarize(const DepthImage& img, double grain_radius) {
  std::vector<std::int32_t> pixels = segment(img, grain_radius);
  std::vector<Vec3> cam_pts = reproject(pixels, img);
  // The simulated camera looks straight down over a level ground plane, so
  // height above ground is just camera height minus depth.
  double h = img.config.camera_height;
  std::vector<Vec3> world;
  world.reserve(cam_pts.size());
  for (const Vec3& p : cam_pts) world.push_back({p.x, p.y, h - p.z});
  return stats_from_cloud(finalize_cloud(std::move(world)));
}

SummaryStats summarize(const DepthImage& img, const std::vector<std::uint8_t>& mask) {
  std::vector<std::int32_t> grain_pixels = segment(img, mask);
  std::vector<std::int32_t> ground_pixels;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (!mask[i]) ground_pixels.push_back(static_cast<std::int32_t>(i));
  std::vector<Vec3> grains = reproject(grain_pixels, img);
  std::vector<Vec3> ground = reproject(ground_pixels, img);
  return stats_from_cloud(level_ground(grains, ground));
}

std::array<double, kStatCount> standardize(const SummaryStats& stats,
                                           const std::array<double, kStatCount>& mean,
                                           const std::array<double, kStatCount>& stddev) {
  std::array<double, kStatCount> out{};
  for (int i = 0; i < kStatCount; ++i)
    out[static_cast<std::size_t>(i)] =
        (stats.v[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)]) /
        std::max(stddev[static_cast<std::size_t>(i)], 1e-9);
  return out;
}

double l2_error(const SummaryStats& a, const SummaryStats& b,
                const std::array<double, kStatCount>& mean,
                const std::array<double, kStatCount>& stddev) {
  std::array<double, kStatCount> za = standardize(a, mean, stddev);
  std::array<double, kStatCount> zb = standardize(b, mean, stddev);
  double s = 0.0;
  for (int i = 0; i < kStatCount; ++i) {
    double d = za[static_cast<std::size_t>(i)] - zb[static_cast<std::size_t>(i)];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace granulab::features
