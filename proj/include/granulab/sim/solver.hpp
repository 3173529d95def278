#pragma once

#include <memory>
#include <vector>

#include "granulab/sim/types.hpp"

namespace granulab::sim {

// One resolved contact at the end of a substep, with the accumulated
// normal and tangential impulse magnitudes. `b` is a grain index, or
// kGround / kFunnel for the static geometry.
struct ContactRecord {
  int a = 0;
  int b = 0;
  double jn = 0.0;
  double jt = 0.0;
  double penetration = 0.0;
};

inline constexpr int kGround = -1;
inline constexpr int kFunnel = -2;

class ContactSink {
 public:
  virtual ~ContactSink() = default;
  virtual void on_substep(double time, const std::vector<ContactRecord>& contacts) = 0;
};

// Advances scenes one step (substeps included) with reusable scratch
// buffers. Stepping is a pure function of (state, params, funnel, config):
// two Steppers fed the same inputs produce bit-identical outputs.
class Stepper {
 public:
  Stepper(const GrainParams& params, const FunnelSpec& funnel, const SimConfig& config);
  ~Stepper();

  Stepper(const Stepper&) = delete;
  Stepper& operator=(const Stepper&) = delete;

  void advance(SceneState& state, ContactSink* sink = nullptr);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;

  friend double max_penetration(const SceneState&, const GrainParams&, const FunnelSpec&);
};

SceneState step(const SceneState& state, const GrainParams& params, const FunnelSpec& funnel,
                const SimConfig& config, ContactSink* sink = nullptr);

// Deepest overlap in the current state (grain-grain, grain-ground,
// grain-funnel), in meters. Zero when nothing touches.
double max_penetration(const SceneState& state, const GrainParams& params,
                       const FunnelSpec& funnel);

}  // namespace granulab::sim
