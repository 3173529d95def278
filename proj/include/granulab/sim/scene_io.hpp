#pragma once

#include <filesystem>

#include "granulab/sim/types.hpp"

namespace granulab::sim {

// Everything needed to reproduce or resume a simulation.
struct SceneBundle {
  GrainParams params;
  FunnelSpec funnel;
  SimConfig config;
  SceneState state;
};

void save_scene(const std::filesystem::path& path, const SceneBundle& bundle);
SceneBundle load_scene(const std::filesystem::path& path);

// Flat x,y,z table of grain centers.
void save_positions_csv(const std::filesystem::path& path, const SceneState& state);
std::vector<Vec3> load_positions_csv(const std::filesystem::path& path);

}  // namespace granulab::sim
