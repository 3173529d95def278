#include "granulab/sim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "granulab/core/error.hpp"
#include "granulab/core/rng.hpp"
#include "granulab/sim/funnel.hpp"

namespace granulab::sim {

namespace {

// Impacts slower than this settle inelastically, which keeps resting
// grains from restitution jitter.
constexpr double kRestitutionSpeedCutoff = 0.01;  // m/s

// Tiny spawn kick (breaks the perfect lattice symmetry so different seeds
// evolve into distinct formations; far below any physical scale here).
constexpr double kSpawnKick = 1e-10;  // m/s
constexpr std::uint64_t kSpawnKickSalt = 0x6b69636bULL;

struct Contact {
  int a;
  int b;  // grain index, or kGround / kFunnel
  Vec3 n;  // unit, from b toward a
  double pen;
  double target;  // normal relative velocity to reach
  bool impact;    // approaching faster than the resting cutoff
  double acc_n;
  Vec3 acc_t;
};

// Uniform-grid broadphase. Cell edge is 2.5 R so touching grains are never
// more than one cell apart; entries are sorted by (cell, index) and pairs
// are re-sorted afterwards, so the candidate order never depends on memory
// layout.
class BroadPhase {
 public:
  void build(const std::vector<Vec3>& pos, double cell) {
    inv_cell_ = 1.0 / cell;
    entries_.clear();
    entries_.reserve(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i)
      entries_.emplace_back(key_of(pos[i]), static_cast<int>(i));
    std::sort(entries_.begin(), entries_.end());
  }

  void collect_pairs(const std::vector<Vec3>& pos, double max_dist,
                     std::vector<std::pair<int, int>>& out) const {
    // The 13 lexicographically-forward neighbor offsets; together with the
    // own cell they cover all 27 neighbors once.
    static constexpr int off[13][3] = {{0, 0, 1},  {0, 1, -1},  {0, 1, 0},  {0, 1, 1},
                                       {1, -1, -1}, {1, -1, 0}, {1, -1, 1}, {1, 0, -1},
                                       {1, 0, 0},  {1, 0, 1},  {1, 1, -1}, {1, 1, 0},
                                       {1, 1, 1}};
    out.clear();
    double max_d2 = max_dist * max_dist;
    for (std::size_t idx = 0; idx < entries_.size(); ++idx) {
      auto [key, i] = entries_[idx];
      // same cell: entries are sorted, so later ones have larger index
      for (std::size_t j = idx + 1; j < entries_.size() && entries_[j].first == key; ++j)
        maybe_pair(pos, i, entries_[j].second, max_d2, out);
      long long cx, cy, cz;
      unpack(key, cx, cy, cz);
      for (const auto& o : off) {
        std::uint64_t nk = pack(cx + o[0], cy + o[1], cz + o[2]);
        auto it = std::lower_bound(entries_.begin(), entries_.end(),
                                   std::make_pair(nk, -1));
        for (; it != entries_.end() && it->first == nk; ++it)
          maybe_pair(pos, i, it->second, max_d2, out);
      }
    }
    std::sort(out.begin(), out.end());
  }

 private:
  static void maybe_pair(const std::vector<Vec3>& pos, int i, int j, double max_d2,
                         std::vector<std::pair<int, int>>& out) {
    if (norm2(pos[i] - pos[j]) >= max_d2) return;
    out.emplace_back(std::min(i, j), std::max(i, j));
  }

  static std::uint64_t pack(long long x, long long y, long long z) {
    constexpr long long lim = (1LL << 20) - 1;
    auto clampc = [](long long v, long long lo, long long hi) {
      return v < lo ? lo : (v > hi ? hi : v);
    };
    std::uint64_t ux = static_cast<std::uint64_t>(clampc(x, -lim, lim) + lim);
    std::uint64_t uy = static_cast<std::uint64_t>(clampc(y, -lim, lim) + lim);
    std::uint64_t uz = static_cast<std::uint64_t>(clampc(z, -lim, lim) + lim);
    return (ux << 42) | (uy << 21) | uz;
  }

  static void unpack(std::uint64_t key, long long& x, long long& y, long long& z) {
    constexpr long long lim = (1LL << 20) - 1;
    x = static_cast<long long>(key >> 42) - lim;
    y = static_cast<long long>((key >> 21) & 0x1fffff) - lim;
    z = static_cast<long long>(key & 0x1fffff) - lim;
  }

  std::uint64_t key_of(const Vec3& p) const {
    return pack(static_cast<long long>(std::floor(p.x * inv_cell_)),
                static_cast<long long>(std::floor(p.y * inv_cell_)),
                static_cast<long long>(std::floor(p.z * inv_cell_)));
  }

  double inv_cell_ = 1.0;
  std::vector<std::pair<std::uint64_t, int>> entries_;
};

}  // namespace

struct Stepper::Impl {
  GrainParams params;
  FunnelSpec funnel;
  SimConfig cfg;

  double R, inv_m, inv_I, dt_sub;
  double slop;          // detection margin and resting overlap allowance
  double kn_static_inv, kn_pair_inv, kt_static_inv, kt_pair_inv;

  BroadPhase broad;
  std::vector<std::pair<int, int>> pairs;
  std::vector<Contact> contacts;
  std::vector<Vec3> v_ref;
  std::vector<ContactRecord> records;

  Impl(const GrainParams& p, const FunnelSpec& f, const SimConfig& c)
      : params(p), funnel(f), cfg(c) {
    validate(params);
    validate(funnel, params.radius);
    validate(cfg, params);
    R = params.radius;
    inv_m = 1.0 / params.mass;
    inv_I = 1.0 / (0.4 * params.mass * R * R);
    dt_sub = cfg.dt / cfg.substeps;
    slop = 0.01 * R;
    kn_static_inv = params.mass;
    kn_pair_inv = params.mass / 2.0;
    // tangential effective mass includes the R^2/I = 2.5/m rotation term
    kt_static_inv = cfg.lock_rotation ? params.mass : params.mass / 3.5;
    kt_pair_inv = cfg.lock_rotation ? params.mass / 2.0 : params.mass / 7.0;
  }

  void detect(const SceneState& s) {
    contacts.clear();
    const auto& pos = s.positions;
    int n = static_cast<int>(pos.size());

    double funnel_lo = funnel.tip_height - R - slop;
    double funnel_hi = funnel.rim_height() + R + slop;
    double funnel_out = funnel.top_radius + R + slop;
    double bore = funnel.spout_radius - R - slop;  // clear of the spout wall below this

    for (int i = 0; i < n; ++i) {
      const Vec3& p = pos[i];
      if (p.z - R < slop)
        contacts.push_back({i, kGround, {0.0, 0.0, 1.0}, R - p.z, 0.0, false, 0.0, {}});
      if (p.z > funnel_lo && p.z < funnel_hi) {
        double rho2 = p.x * p.x + p.y * p.y;
        bool in_bore = bore > 0.0 && rho2 < bore * bore;
        if (rho2 < funnel_out * funnel_out && !in_bore) {
          SurfaceHit hit = funnel_closest(funnel, p);
          if (hit.distance - R < slop)
            contacts.push_back({i, kFunnel, hit.normal, R - hit.distance, 0.0, false, 0.0, {}});
        }
      }
    }

    broad.build(pos, 2.5 * R);
    broad.collect_pairs(pos, 2.0 * R + slop, pairs);
    for (auto [i, j] : pairs) {
      Vec3 d = pos[i] - pos[j];
      double dist = norm(d);
      Vec3 nrm = dist > 1e-12 ? d * (1.0 / dist) : Vec3{1.0, 0.0, 0.0};
      contacts.push_back({i, j, nrm, 2.0 * R - dist, 0.0, false, 0.0, {}});
    }
  }

  // Refresh geometry from current positions and set restitution targets
  // from the pre-gravity velocity snapshot.
  void prepare(const SceneState& s) {
    const auto& pos = s.positions;
    for (Contact& c : contacts) {
      if (c.b == kGround) {
        c.pen = R - pos[c.a].z;
      } else if (c.b == kFunnel) {
        SurfaceHit hit = funnel_closest(funnel, pos[c.a]);
        c.n = hit.normal;
        c.pen = R - hit.distance;
      } else {
        Vec3 d = pos[c.a] - pos[c.b];
        double dist = norm(d);
        c.n = dist > 1e-12 ? d * (1.0 / dist) : Vec3{1.0, 0.0, 0.0};
        c.pen = 2.0 * R - dist;
      }
      Vec3 rel = c.b >= 0 ? v_ref[c.a] - v_ref[c.b] : v_ref[c.a];
      double vn = dot(rel, c.n);
      c.impact = vn < -kRestitutionSpeedCutoff;
      c.target = c.impact ? -params.e * vn : 0.0;
      c.acc_n = 0.0;
      c.acc_t = {};
    }
  }

  // Coulomb friction on the contact-point relative velocity: couples spin
  // and sliding through the torque reaction, so rubbing converts slip into
  // rolling. Returns the linear speed change it applied.
  double tangent_slip(SceneState& s, Contact& c, double relax_t) {
    Vec3& va = s.velocities[c.a];
    auto& ang = s.angular_velocities;
    const bool is_pair = c.b >= 0;
    Vec3 u = is_pair ? va - s.velocities[c.b] : va;
    u += cross(ang[c.a], c.n * -R);
    if (is_pair) u -= cross(ang[c.b], c.n * R);
    Vec3 ut = u - c.n * dot(u, c.n);
    double kt_inv = is_pair ? kt_pair_inv : kt_static_inv;
    Vec3 acc_new_t = c.acc_t - ut * (kt_inv * relax_t);
    double lim = params.mu_s * c.acc_n;
    double t2 = norm2(acc_new_t);
    if (t2 > lim * lim) acc_new_t *= lim / std::sqrt(t2);
    Vec3 djt = acc_new_t - c.acc_t;
    c.acc_t = acc_new_t;
    if (djt.x == 0.0 && djt.y == 0.0 && djt.z == 0.0) return 0.0;
    va += djt * inv_m;
    if (is_pair) s.velocities[c.b] -= djt * inv_m;
    ang[c.a] += cross(c.n * -R, djt) * inv_I;
    if (is_pair) ang[c.b] += cross(c.n * R, -djt) * inv_I;
    return norm(djt) * inv_m;
  }

  // Coulomb friction on the tangential center velocity, torque-free: scrubs
  // translation at the Coulomb rate without creating a rolling mode. This is
  // what lets piles exist at all; ideal spheres under contact-point friction
  // alone cannot rest on any slope steeper than atan(mu_r).
  double tangent_center(SceneState& s, Contact& c, double relax_t) {
    Vec3& va = s.velocities[c.a];
    const bool is_pair = c.b >= 0;
    Vec3 u = is_pair ? va - s.velocities[c.b] : va;
    Vec3 ut = u - c.n * dot(u, c.n);
    double kt_inv = is_pair ? kn_pair_inv : kn_static_inv;
    Vec3 acc_new_t = c.acc_t - ut * (kt_inv * relax_t);
    double lim = params.mu_s * c.acc_n;
    double t2 = norm2(acc_new_t);
    if (t2 > lim * lim) acc_new_t *= lim / std::sqrt(t2);
    Vec3 djt = acc_new_t - c.acc_t;
    c.acc_t = acc_new_t;
    if (djt.x == 0.0 && djt.y == 0.0 && djt.z == 0.0) return 0.0;
    va += djt * inv_m;
    if (is_pair) s.velocities[c.b] -= djt * inv_m;
    return norm(djt) * inv_m;
  }

  void solve_velocities(SceneState& s) {
    auto& vel = s.velocities;
    const double relax = cfg.relaxation;
    const double mu_s = params.mu_s;
    const bool rot = !cfg.lock_rotation;

    for (int it = 0; it < cfg.solver_iterations; ++it) {
      double max_dv = 0.0;
      for (Contact& c : contacts) {
        Vec3& va = vel[c.a];
        const bool is_pair = c.b >= 0;

        double vn = is_pair ? dot(va - vel[c.b], c.n) : dot(va, c.n);
        double kn_inv = is_pair ? kn_pair_inv : kn_static_inv;
        double want = (c.target - vn) * kn_inv * relax;
        double acc_new = c.acc_n + want;
        if (acc_new < 0.0) acc_new = 0.0;
        double dj = acc_new - c.acc_n;
        c.acc_n = acc_new;
        if (dj != 0.0) {
          Vec3 imp = c.n * (dj * inv_m);
          va += imp;
          if (is_pair) vel[c.b] -= imp;
          max_dv = std::max(max_dv, std::fabs(dj) * inv_m);
        }

        // Impacts rub at the contact point; persistent contacts scrub the
        // center velocity directly.
        if (mu_s > 0.0 && c.acc_n > 0.0) {
          double dv = c.impact && rot ? tangent_slip(s, c, relax) : tangent_center(s, c, relax);
          max_dv = std::max(max_dv, dv);
        }
      }
      if (max_dv < 1e-12) break;
    }

    // Impact epilogue, still inside each contact's Coulomb budget: one
    // arrest pass scrubs the tangential center motion a hop would otherwise
    // carry away, so grains shed horizontal speed at every bounce instead
    // of skipping across the plane on a spin-matched trajectory. The spin
    // itself survives the pass; only rolling resistance bleeds it, so how
    // agitated a settling pile stays is the imprint mu_r leaves behind.
    if (mu_s > 0.0) {
      for (Contact& c : contacts) {
        if (!c.impact || c.acc_n <= 0.0) continue;
        tangent_center(s, c, relax);
      }
    }
  }

  // Constant-torque rolling resistance: each contact bleeds angular speed
  // in proportion to its normal impulse, never reversing the spin.
  void apply_rolling(SceneState& s) {
    if (cfg.lock_rotation || params.mu_r <= 0.0) return;
    auto spin_down = [](Vec3& w, double dw) {
      double wn = norm(w);
      if (wn <= dw)
        w = {};
      else
        w *= 1.0 - dw / wn;
    };
    for (const Contact& c : contacts) {
      if (c.acc_n <= 0.0) continue;
      double dw = params.mu_r * R * c.acc_n * inv_I;
      spin_down(s.angular_velocities[c.a], dw);
      if (c.b >= 0) spin_down(s.angular_velocities[c.b], dw);
    }
  }

  void project_positions(SceneState& s) {
    auto& pos = s.positions;
    const double relax = cfg.relaxation;
    for (int pass = 0; pass < cfg.position_passes; ++pass) {
      for (const Contact& c : contacts) {
        if (c.b == kGround) {
          double pen = R - pos[c.a].z;
          if (pen > slop) pos[c.a].z += relax * (pen - slop);
        } else if (c.b == kFunnel) {
          SurfaceHit hit = funnel_closest(funnel, pos[c.a]);
          double pen = R - hit.distance;
          if (pen > slop) pos[c.a] += hit.normal * (relax * (pen - slop));
        } else {
          Vec3 d = pos[c.a] - pos[c.b];
          double dist = norm(d);
          double pen = 2.0 * R - dist;
          if (pen > slop) {
            Vec3 nrm = dist > 1e-12 ? d * (1.0 / dist) : Vec3{1.0, 0.0, 0.0};
            Vec3 corr = nrm * (0.5 * relax * (pen - slop));
            pos[c.a] += corr;
            pos[c.b] -= corr;
          }
        }
      }
    }
  }

  void emit(double t, ContactSink* sink) {
    if (!sink) return;
    records.clear();
    records.reserve(contacts.size());
    for (const Contact& c : contacts)
      records.push_back({c.a, c.b, c.acc_n, norm(c.acc_t), c.pen});
    sink->on_substep(t, records);
  }

  void advance(SceneState& s, ContactSink* sink) {
    validate(s);
    if (s.time == 0.0 && !s.positions.empty()) {
      Rng kick(mix_seed(cfg.seed, kSpawnKickSalt));
      for (Vec3& v : s.velocities) {
        v.x += kick.uniform(-1.0, 1.0) * kSpawnKick;
        v.y += kick.uniform(-1.0, 1.0) * kSpawnKick;
        v.z += kick.uniform(-1.0, 1.0) * kSpawnKick;
      }
    }

    detect(s);
    for (int sub = 0; sub < cfg.substeps; ++sub) {
      v_ref = s.velocities;
      Vec3 dv = cfg.gravity * dt_sub;
      for (Vec3& v : s.velocities) v += dv;

      prepare(s);
      solve_velocities(s);
      apply_rolling(s);
      emit(s.time + (sub + 1) * dt_sub, sink);

      for (std::size_t i = 0; i < s.positions.size(); ++i)
        s.positions[i] += s.velocities[i] * dt_sub;

      // Fresh contacts resolve what the move just created and carry over
      // into the next substep's velocity solve.
      detect(s);
      project_positions(s);

      for (std::size_t i = 0; i < s.positions.size(); ++i) {
        if (!finite(s.positions[i]) || !finite(s.velocities[i]) ||
            !finite(s.angular_velocities[i]) || norm2(s.velocities[i]) >= 1e6) {
          throw DivergenceError("simulation diverged at t=" + std::to_string(s.time) +
                                " (grain " + std::to_string(i) + ")");
        }
      }
    }
    s.time += cfg.dt;
  }
};

Stepper::Stepper(const GrainParams& params, const FunnelSpec& funnel, const SimConfig& config)
    : impl_(std::make_unique<Impl>(params, funnel, config)) {}

Stepper::~Stepper() = default;

void Stepper::advance(SceneState& state, ContactSink* sink) { impl_->advance(state, sink); }

SceneState step(const SceneState& state, const GrainParams& params, const FunnelSpec& funnel,
                const SimConfig& config, ContactSink* sink) {
  Stepper stepper(params, funnel, config);
  SceneState out = state;
  stepper.advance(out, sink);
  return out;
}

double max_penetration(const SceneState& state, const GrainParams& params,
                       const FunnelSpec& funnel) {
  SimConfig cfg;
  cfg.spacing = 3.0 * params.radius;  // irrelevant here, just keep validation happy
  Stepper::Impl impl(params, funnel, cfg);
  impl.detect(state);
  double worst = 0.0;
  for (const Contact& c : impl.contacts) worst = std::max(worst, c.pen);
  return worst;
}

}  // namespace granulab::sim
