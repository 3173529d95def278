#include "granulab/sim/scene.hpp"

#include <cmath>
#include <utility>

#include "granulab/core/error.hpp"

namespace granulab::sim {

SceneState build_scene(const GrainParams& params, const FunnelSpec& funnel,
                       const SimConfig& config) {
  validate(params);
  validate(funnel, params.radius);
  validate(config, params);

  const int nx = config.grid[0], ny = config.grid[1], nz = config.grid[2];
  const double s = config.spacing;
  const double z0 = funnel.rim_height() - params.radius;

  // The lowest layer sits just inside the cone opening; make sure the
  // whole block clears the wall there.
  double t = (z0 - funnel.spout_top()) / funnel.cone_height;
  double wall = funnel.spout_radius + (funnel.top_radius - funnel.spout_radius) * t;
  double half_x = 0.5 * (nx - 1) * s, half_y = 0.5 * (ny - 1) * s;
  double rho_max = std::sqrt(half_x * half_x + half_y * half_y);
  if (rho_max + params.radius >= wall)
    throw ValidationError("spawn block does not fit inside the funnel opening");

  SceneState state;
  std::size_t n = static_cast<std::size_t>(nx) * ny * nz;
  state.positions.reserve(n);
  for (int iz = 0; iz < nz; ++iz)
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix)
        state.positions.push_back({ix * s - half_x, iy * s - half_y, z0 + iz * s});
  state.velocities.assign(n, Vec3{});
  state.angular_velocities.assign(n, Vec3{});
  return state;
}

RunResult run_to_rest(SceneState state, const GrainParams& params, const FunnelSpec& funnel,
                      const SimConfig& config, ContactSink* sink) {
  Stepper stepper(params, funnel, config);
  RunResult result;
  result.state = std::move(state);

  const double thr2 = config.rest_speed_threshold * config.rest_speed_threshold;
  double hold = 0.0;
  while (result.state.time < config.max_sim_time - 1e-9) {
    stepper.advance(result.state, sink);
    ++result.steps;
    double fastest = 0.0;
    for (const Vec3& v : result.state.velocities) fastest = std::max(fastest, norm2(v));
    if (fastest < thr2) {
      hold += config.dt;
      if (hold >= config.rest_hold_time - 1e-9) {
        result.rested = true;
        break;
      }
    } else {
      hold = 0.0;
    }
  }
  return result;
}

RunResult simulate_formation(const GrainParams& params, const FunnelSpec& funnel,
                             const SimConfig& config) {
  return run_to_rest(build_scene(params, funnel, config), params, funnel, config);
}

}  // namespace granulab::sim
