#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "granulab/camera/camera.hpp"
#include "granulab/core/vec3.hpp"

namespace granulab::features {

using camera::DepthImage;

// Grain surface points in the leveled world frame: z is height above the
// ground plane, r the horizontal distance from the formation centroid.
struct GrainPointCloud {
  std::vector<Vec3> points;
  std::vector<double> r;
  std::vector<double> z;
};

// Shifted-scaled chi distribution fitted to the radial distances:
// density (1/A) chi((x - b)/A; df).
struct ChiFit {
  double df = 0.0;
  double b = 0.0;
  double A = 0.0;
  double nll = 0.0;
  bool degenerate = false;  // input too small or constant; clamped fallback
};

constexpr int kStatCount = 16;

// Fixed-order summary vector:
// [max(z), mean(z), std(z), max(r), mean(r), std(x), std(y), std(r),
//  iqr(x), iqr(y), iqr(r), kurt(r), dcor(r,z), chi df, chi b, chi A].
// Standard deviations are population ones, IQR uses linear-interpolation
// quantiles, and kurt is the raw fourth standardized moment (3 for a
// Gaussian).
struct SummaryStats {
  std::array<double, kStatCount> v{};
  bool chi_degenerate = false;
};

const std::array<const char*, kStatCount>& stat_names();

// Pixels whose pooled depth sits more than half a grain radius below the
// ground reading. Returns row-major linear indices; throws
// EmptySegmentationError when nothing qualifies.
std::vector<std::int32_t> segment(const DepthImage& img, double grain_radius);

// Mask path for externally captured frames: selects exactly the true
// pixels, mask verbatim.
std::vector<std::int32_t> segment(const DepthImage& img,
                                  const std::vector<std::uint8_t>& mask);

// Pinhole back-projection of the selected pixels into the camera frame:
// p = depth * K^-1 (u, v, 1), with z along the optical axis.
std::vector<Vec3> reproject(const std::vector<std::int32_t>& pixels,
                            const DepthImage& img);

// Least-squares plane through the ground points (one 2-sigma residual
// rejection pass), then a rigid map taking the plane to z = 0 with z up
// and the grain centroid to the horizontal origin.
GrainPointCloud level_ground(const std::vector<Vec3>& grains_cam,
                             const std::vector<Vec3>& ground_cam);

// Finishes a cloud whose points are already in a z-up ground frame:
// centers x, y on the centroid and fills r and z.
GrainPointCloud finalize_cloud(std::vector<Vec3> points_world);

// Maximum-likelihood chi fit: method-of-moments start, simplex refinement,
// df clamped to [0.5, 50]. Constant or tiny inputs yield a degenerate
// clamped fit instead of an error.
ChiFit fit_chi(const std::vector<double>& r);

// Exact double-centered distance correlation, subsampled to at most 4096
// aligned pairs with a fixed internal seed. Parallel row sums; the
// reference below is the textbook full-matrix serial version.
double distance_correlation(const std::vector<double>& x, const std::vector<double>& y);
double distance_correlation_reference(const std::vector<double>& x,
                                      const std::vector<double>& y);

SummaryStats stats_from_cloud(const GrainPointCloud& cloud);

// Full pipeline for simulated frames: threshold segmentation, reprojection,
// direct ground-frame conversion (the render frame is already level).
SummaryStats summarize(const DepthImage& img, double grain_radius);

// Pipeline for captured frames: mask segmentation plus plane leveling from
// the non-mask pixels.
SummaryStats summarize(const DepthImage& img, const std::vector<std::uint8_t>& mask);

// Per-entry z-score against reference moments; stds floored at 1e-9.
std::array<double, kStatCount> standardize(const SummaryStats& stats,
                                           const std::array<double, kStatCount>& mean,
                                           const std::array<double, kStatCount>& stddev);

// Euclidean distance between two standardized summaries.
double l2_error(const SummaryStats& a, const SummaryStats& b,
                const std::array<double, kStatCount>& mean,
                const std::array<double, kStatCount>& stddev);

}  // namespace granulab::features
