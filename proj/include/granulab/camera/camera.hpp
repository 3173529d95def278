#pragma once

#include <cstdint>
#include <vector>

#include "granulab/sim/types.hpp"

namespace granulab::camera {

// Birds-eye pinhole camera centered over the origin, looking straight down.
// Defaults give a 0.58 m square footprint on the ground from 0.29 m up,
// rendered at 320x320; downsampling by 20 leaves the 16x16 statistics grid.
struct CameraConfig {
  double camera_height = 0.29;  // m above the ground plane
  int width = 320;              // px
  int height = 320;             // px
  double fx = 160.0;            // px, width * camera_height / footprint width
  double fy = 160.0;
  double cx = 159.5;  // px, pixel centers sit on integer coordinates
  double cy = 159.5;
  int downsample_factor = 20;
};

void validate(const CameraConfig& cam);

// Row-major metric depth, measured from the camera plane straight down, so
// bare ground reads camera_height. Pixel (u, v) back-projects through the
// stored intrinsics as x = depth*(u-cx)/fx, y = depth*(v-cy)/fy.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> depth;
  CameraConfig config;

  float at(int x, int y) const { return depth[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return depth[static_cast<std::size_t>(y) * width + x]; }
};

struct NoiseConfig {
  double blur_sigma = 0.0;   // px
  double pixel_sigma = 0.0;  // m
  std::uint64_t seed = 0;
};

void validate(const NoiseConfig& noise);

// Analytic nearest ray-sphere hit per pixel; rays that miss every grain
// return the ground depth. Tiled and parallel; bit-identical to the
// reference below.
DepthImage render_depth(const sim::SceneState& state, double radius,
                        const CameraConfig& cam);

// Brute-force every-sphere-per-pixel renderer, kept serial as the oracle
// and benchmark baseline.
DepthImage render_depth_reference(const sim::SceneState& state, double radius,
                                  const CameraConfig& cam);

// Block-mean pooling over n x n blocks; n must divide both dimensions.
// Intrinsics are rescaled so back-projection still lands on the same rays.
DepthImage downsample(const DepthImage& img, int n);

// Separable Gaussian convolution, kernel radius ceil(3*sigma), borders
// mirrored edge-inclusive. sigma = 0 returns the image unchanged.
DepthImage apply_blur(const DepthImage& img, double blur_sigma);

// Adds i.i.d. zero-mean Gaussian depth noise in meters, seeded.
DepthImage apply_pixel_noise(const DepthImage& img, double pixel_sigma,
                             std::uint64_t seed);

// Blur first, then pixel noise; either is skipped at sigma = 0.
DepthImage apply_noise(const DepthImage& img, const NoiseConfig& noise);

}  // namespace granulab::camera
