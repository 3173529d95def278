#pragma once

#include "granulab/core/vec3.hpp"
#include "granulab/sim/types.hpp"

namespace granulab::sim {

// Closest point on the funnel shell to a query point. The shell is treated
// as a two-sided, zero-thickness surface of revolution; `normal` points from
// the surface toward the query point.
struct SurfaceHit {
  double distance = 0.0;
  Vec3 normal{0.0, 0.0, 1.0};
};

SurfaceHit funnel_closest(const FunnelSpec& funnel, const Vec3& p);

}  // namespace granulab::sim
