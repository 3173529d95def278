#pragma once

#include "granulab/sim/solver.hpp"
#include "granulab/sim/types.hpp"

namespace granulab::sim {

// Spawn grains on a rectangular lattice centered on the funnel axis, with
// the bottom layer just inside the cone opening, all at rest.
SceneState build_scene(const GrainParams& params, const FunnelSpec& funnel,
                       const SimConfig& config);

struct RunResult {
  SceneState state;
  bool rested = false;  // false means max_sim_time ran out first
  int steps = 0;
};

// Step until every grain has been slower than rest_speed_threshold for
// rest_hold_time, or until max_sim_time.
RunResult run_to_rest(SceneState state, const GrainParams& params, const FunnelSpec& funnel,
                      const SimConfig& config, ContactSink* sink = nullptr);

// build_scene + run_to_rest.
RunResult simulate_formation(const GrainParams& params, const FunnelSpec& funnel,
                             const SimConfig& config);

}  // namespace granulab::sim
