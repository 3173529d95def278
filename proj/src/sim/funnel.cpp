#include "granulab/sim/funnel.hpp"

#include <cmath>

namespace granulab::sim {

namespace {

// Closest point on a 2D segment, in the (radial, vertical) half-plane.
struct Hit2 {
  double dist2;
  double qr, qz;  // closest point
};

Hit2 segment_closest(double pr, double pz, double ar, double az, double br, double bz) {
  double dr = br - ar, dz = bz - az;
  double len2 = dr * dr + dz * dz;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((pr - ar) * dr + (pz - az) * dz) / len2;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  }
  double qr = ar + t * dr, qz = az + t * dz;
  double er = pr - qr, ez = pz - qz;
  return {er * er + ez * ez, qr, qz};
}

}  // namespace

SurfaceHit funnel_closest(const FunnelSpec& f, const Vec3& p) {
  double rho = std::sqrt(p.x * p.x + p.y * p.y);

  // Profile polyline, rim down to tip: cone wall then the straight spout.
  const double rim_z = f.rim_height();
  const double spout_z = f.spout_top();
  Hit2 cone = segment_closest(rho, p.z, f.top_radius, rim_z, f.spout_radius, spout_z);
  Hit2 spout = segment_closest(rho, p.z, f.spout_radius, spout_z, f.spout_radius, f.tip_height);
  const Hit2& best = cone.dist2 <= spout.dist2 ? cone : spout;

  double nr = rho - best.qr, nz = p.z - best.qz;
  double d = std::sqrt(nr * nr + nz * nz);
  if (d > 1e-12) {
    nr /= d;
    nz /= d;
  } else {
    // Query point sits exactly on the shell; any perpendicular will do.
    nr = -1.0;
    nz = 0.0;
  }

  Vec3 radial{1.0, 0.0, 0.0};
  if (rho > 1e-12) radial = Vec3{p.x / rho, p.y / rho, 0.0};

  SurfaceHit hit;
  hit.distance = d;
  hit.normal = Vec3{nr * radial.x, nr * radial.y, nz};
  return hit;
}

}  // namespace granulab::sim
