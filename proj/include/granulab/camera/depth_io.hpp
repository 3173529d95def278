#pragma once

#include <filesystem>

#include "granulab/camera/camera.hpp"

namespace granulab::camera {

// Raw row-major 32-bit little-endian floats at `path`, camera metadata in a
// JSON sidecar at `path` + ".json".
void save_depth(const std::filesystem::path& path, const DepthImage& img);
DepthImage load_depth(const std::filesystem::path& path);

// Binary PGM (P5) with two-byte samples holding integer millimeters, the
// usual export for recorded depth frames. The file carries no intrinsics,
// so the caller supplies the camera.
DepthImage import_depth_pgm(const std::filesystem::path& path, const CameraConfig& cam);

}  // namespace granulab::camera
