#include "granulab/sim/types.hpp"

#include <cmath>
#include <string>

#include "granulab/core/error.hpp"

namespace granulab::sim {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace

void validate(const GrainParams& p) {
  require(std::isfinite(p.mu_s) && p.mu_s >= 0.0 && p.mu_s <= 1.0, "mu_s must be in [0, 1]");
  require(std::isfinite(p.mu_r) && p.mu_r >= 1e-7 && p.mu_r <= 1e-1,
          "mu_r must be in [1e-7, 1e-1]");
  require(std::isfinite(p.e) && p.e >= 0.0 && p.e <= 1.0, "e must be in [0, 1]");
  require(std::isfinite(p.radius) && p.radius > 0.0, "radius must be positive");
  require(std::isfinite(p.mass) && p.mass > 0.0, "mass must be positive");
}

void validate(const FunnelSpec& f, double grain_radius) {
  require(f.tip_height > 0.0, "tip_height must be positive");
  require(f.spout_radius > 0.0, "spout_radius must be positive");
  require(f.top_radius > f.spout_radius, "top_radius must exceed spout_radius");
  require(f.cone_height > 0.0, "cone_height must be positive");
  require(f.spout_length >= 0.0, "spout_length must not be negative");
  require(f.spout_radius > grain_radius, "grain does not fit through the spout");
}

void validate(const SimConfig& c, const GrainParams& p) {
  require(std::isfinite(c.dt) && c.dt > 0.0, "dt must be positive");
  require(c.substeps >= 1, "substeps must be at least 1");
  require(c.solver_iterations >= 1, "solver_iterations must be at least 1");
  require(c.position_passes >= 0, "position_passes must not be negative");
  require(c.relaxation > 0.0 && c.relaxation <= 1.0, "relaxation must be in (0, 1]");
  require(finite(c.gravity), "gravity must be finite");
  require(c.grid[0] >= 1 && c.grid[1] >= 1 && c.grid[2] >= 1, "grid counts must be positive");
  require(c.spacing >= 2.0 * p.radius * 1.01, "spacing must exceed one grain diameter");
  require(c.rest_speed_threshold > 0.0, "rest_speed_threshold must be positive");
  require(c.rest_hold_time >= 0.0, "rest_hold_time must not be negative");
  require(c.max_sim_time > 0.0, "max_sim_time must be positive");
}

void validate(const SceneState& s) {
  require(s.velocities.size() == s.positions.size() &&
              s.angular_velocities.size() == s.positions.size(),
          "state arrays must have equal length");
  require(std::isfinite(s.time) && s.time >= 0.0, "state time must be finite and non-negative");
}

}  // namespace granulab::sim
