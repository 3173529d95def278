#include "granulab/sim/scene_io.hpp"

#include <string>

#include "granulab/core/file_io.hpp"
#include "granulab/core/json.hpp"
#include "granulab/core/text.hpp"

namespace granulab::sim {

namespace {

constexpr const char* kSceneSchema = "granulab.scene/1";

Json vec_to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number())
    throw DataError(std::string(what) + " must be an array of three numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json vecs_to_json(const std::vector<Vec3>& vs) {
  Json out = Json::array();
  for (const Vec3& v : vs) out.push_back(vec_to_json(v));
  return out;
}

std::vector<Vec3> vecs_from_json(const Json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string(what) + " must be an array");
  std::vector<Vec3> out;
  out.reserve(j.size());
  for (const Json& e : j) out.push_back(vec_from_json(e, what));
  return out;
}

}  // namespace

void save_scene(const std::filesystem::path& path, const SceneBundle& b) {
  Json j;
  j["schema"] = kSceneSchema;
  j["params"] = {{"mu_s", b.params.mu_s},
                 {"mu_r", b.params.mu_r},
                 {"e", b.params.e},
                 {"radius", b.params.radius},
                 {"mass", b.params.mass}};
  j["funnel"] = {{"tip_height", b.funnel.tip_height},
                 {"top_radius", b.funnel.top_radius},
                 {"spout_radius", b.funnel.spout_radius},
                 {"cone_height", b.funnel.cone_height},
                 {"spout_length", b.funnel.spout_length}};
  j["config"] = {{"dt", b.config.dt},
                 {"substeps", b.config.substeps},
                 {"solver_iterations", b.config.solver_iterations},
                 {"position_passes", b.config.position_passes},
                 {"relaxation", b.config.relaxation},
                 {"gravity", vec_to_json(b.config.gravity)},
                 {"seed", b.config.seed},
                 {"grid", Json::array({b.config.grid[0], b.config.grid[1], b.config.grid[2]})},
                 {"spacing", b.config.spacing},
                 {"rest_speed_threshold", b.config.rest_speed_threshold},
                 {"rest_hold_time", b.config.rest_hold_time},
                 {"max_sim_time", b.config.max_sim_time},
                 {"lock_rotation", b.config.lock_rotation}};
  j["state"] = {{"time", b.state.time},
                {"positions", vecs_to_json(b.state.positions)},
                {"velocities", vecs_to_json(b.state.velocities)},
                {"angular_velocities", vecs_to_json(b.state.angular_velocities)}};
  save_json(path, j);
}

SceneBundle load_scene(const std::filesystem::path& path) {
  Json j = load_json(path);
  if (!j.is_object() || require_string(j, "schema") != kSceneSchema)
    throw DataError("not a scene file (expected schema " + std::string(kSceneSchema) + "): " +
                    path.string());

  SceneBundle b;
  const Json& p = require_key(j, "params");
  b.params.mu_s = require_number(p, "mu_s");
  b.params.mu_r = require_number(p, "mu_r");
  b.params.e = require_number(p, "e");
  b.params.radius = require_number(p, "radius");
  b.params.mass = require_number(p, "mass");

  const Json& f = require_key(j, "funnel");
  b.funnel.tip_height = require_number(f, "tip_height");
  b.funnel.top_radius = require_number(f, "top_radius");
  b.funnel.spout_radius = require_number(f, "spout_radius");
  b.funnel.cone_height = require_number(f, "cone_height");
  b.funnel.spout_length = require_number(f, "spout_length");

  const Json& c = require_key(j, "config");
  b.config.dt = require_number(c, "dt");
  b.config.substeps = static_cast<int>(require_integer(c, "substeps"));
  b.config.solver_iterations = static_cast<int>(require_integer(c, "solver_iterations"));
  b.config.position_passes = static_cast<int>(require_integer(c, "position_passes"));
  b.config.relaxation = require_number(c, "relaxation");
  b.config.gravity = vec_from_json(require_key(c, "gravity"), "gravity");
  b.config.seed = require_key(c, "seed").get<std::uint64_t>();
  const Json& g = require_key(c, "grid");
  if (!g.is_array() || g.size() != 3) throw DataError("grid must be an array of three integers");
  for (int i = 0; i < 3; ++i) b.config.grid[static_cast<std::size_t>(i)] = g[i].get<int>();
  b.config.spacing = require_number(c, "spacing");
  b.config.rest_speed_threshold = require_number(c, "rest_speed_threshold");
  b.config.rest_hold_time = require_number(c, "rest_hold_time");
  b.config.max_sim_time = require_number(c, "max_sim_time");
  const Json& lr = require_key(c, "lock_rotation");
  if (!lr.is_boolean()) throw DataError("lock_rotation must be a boolean");
  b.config.lock_rotation = lr.get<bool>();

  const Json& s = require_key(j, "state");
  b.state.time = require_number(s, "time");
  b.state.positions = vecs_from_json(require_key(s, "positions"), "positions");
  b.state.velocities = vecs_from_json(require_key(s, "velocities"), "velocities");
  b.state.angular_velocities =
      vecs_from_json(require_key(s, "angular_velocities"), "angular_velocities");

  validate(b.params);
  validate(b.funnel, b.params.radius);
  validate(b.config, b.params);
  validate(b.state);
  return b;
}

void save_positions_csv(const std::filesystem::path& path, const SceneState& state) {
  std::string out = "x,y,z\n";
  for (const Vec3& p : state.positions) {
    out += format_double(p.x);
    out += ',';
    out += format_double(p.y);
    out += ',';
    out += format_double(p.z);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<Vec3> load_positions_csv(const std::filesystem::path& path) {
  auto lines = split_lines(read_file(path));
  if (lines.empty() || split_csv_line(lines[0]) != std::vector<std::string>{"x", "y", "z"})
    throw DataError("positions file must start with an 'x,y,z' header: " + path.string());
  std::vector<Vec3> out;
  out.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto cells = split_csv_line(lines[i]);
    if (cells.size() != 3)
      throw DataError("positions row " + std::to_string(i) + " must have three columns");
    out.push_back({parse_double(cells[0]), parse_double(cells[1]), parse_double(cells[2])});
  }
  return out;
}

}  // namespace granulab::sim
