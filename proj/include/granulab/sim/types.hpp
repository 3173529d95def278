#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "granulab/core/vec3.hpp"

namespace granulab::sim {

// Material properties shared by every grain in a scene. These are the
// quantities the calibration pipeline estimates.
struct GrainParams {
  double mu_s = 0.5;      // sliding friction coefficient, [0, 1]
  double mu_r = 1e-6;     // rolling resistance coefficient, [1e-7, 1e-1]
  double e = 0.5;         // coefficient of restitution, [0, 1]
  double radius = 0.002;  // grain radius in meters
  double mass = 5e-5;     // grain mass in kilograms
};

// Funnel: an inverted cone that narrows into a short vertical spout,
// hanging above the ground plane z = 0. All heights are in meters.
// The default cone wall is steeper than 45 degrees so grains drain for
// any sliding friction coefficient up to 1.
struct FunnelSpec {
  double tip_height = 0.12;    // spout exit above the ground
  double top_radius = 0.06;    // cone opening radius at the rim
  double spout_radius = 0.01;  // bore radius of the spout
  double cone_height = 0.04;
  double spout_length = 0.02;

  double spout_top() const { return tip_height + spout_length; }
  double rim_height() const { return tip_height + spout_length + cone_height; }
};

struct SimConfig {
  double dt = 1.0 / 60.0;
  int substeps = 10;
  int solver_iterations = 20;
  int position_passes = 4;
  double relaxation = 0.75;
  Vec3 gravity{0.0, 0.0, -9.81};
  std::uint64_t seed = 0;
  std::array<int, 3> grid{10, 10, 20};  // grains along x, y, z at spawn
  double spacing = 0.008;               // spawn lattice pitch in meters
  double rest_speed_threshold = 0.01;   // m/s; below this a grain counts as still
  double rest_hold_time = 0.5;          // s the whole scene must stay still
  double max_sim_time = 20.0;           // s before giving up on settling
  bool lock_rotation = false;           // freeze angular motion (for controlled tests)
};

struct SceneState {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  std::vector<Vec3> angular_velocities;
  double time = 0.0;

  std::size_t size() const { return positions.size(); }
};

void validate(const GrainParams& params);
void validate(const FunnelSpec& funnel, double grain_radius);
void validate(const SimConfig& config, const GrainParams& params);
void validate(const SceneState& state);

}  // namespace granulab::sim
