#include "teleop/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "teleop/errors.hpp"

namespace teleop::scenario {

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Schema, path + ": " + what);
}

const Json& field(const Json& j, const std::string& path, const char* key) {
  if (!j.is_object()) schema_error(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) schema_error(path + "." + key, "missing required field");
  return *it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema_error(path, "expected a finite number");
  return v;
}

double number_field(const Json& j, const std::string& path, const char* key) {
  return number(field(j, path, key), path + "." + key);
}

double optional_number(const Json& j, const std::string& path, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  return number(j.at(key), path + "." + key);
}

int integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) schema_error(path, "expected an integer");
  return j.get<int>();
}

Vec3 vec3(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) schema_error(path, "expected an array of 3 numbers");
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]"), number(j[2], path + "[2]")};
}

const Json& array_field(const Json& j, const std::string& path, const char* key) {
  const Json& a = field(j, path, key);
  if (!a.is_array()) schema_error(path + "." + key, "expected an array");
  return a;
}

template <typename F>
auto rethrow_as_schema(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Schema) throw;
    schema_error(path, e.what());
  }
}

error_model::KinematicChain parse_chain(const Json& j, const std::string& path) {
  std::vector<error_model::Joint> joints;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    error_model::Joint joint;
    joint.axis = vec3(field(j[i], p, "axis"), p + ".axis");
    joint.link = j[i].contains("link") ? parse_pose(j[i]["link"], p + ".link") : Pose{};
    joint.encoder_error = number_field(j[i], p, "encoder_sigma_rad");
    joints.push_back(joint);
  }
  return rethrow_as_schema(path, [&] { return error_model::KinematicChain(std::move(joints)); });
}

}  // namespace

Pose parse_pose(const Json& j, const std::string& path) {
  if (!j.is_object()) schema_error(path, "expected an object");
  const Vec3 t = j.contains("translation") ? vec3(j["translation"], path + ".translation")
                                           : Vec3::Zero();
  if (!j.contains("rotation_quaternion")) return Pose::from_translation(t);
  const Json& q = j["rotation_quaternion"];
  const std::string qp = path + ".rotation_quaternion";
  if (!q.is_array() || q.size() != 4) schema_error(qp, "expected [w, x, y, z]");
  const Quat quat(number(q[0], qp + "[0]"), number(q[1], qp + "[1]"), number(q[2], qp + "[2]"),
                  number(q[3], qp + "[3]"));
  if (std::abs(quat.norm() - 1.0) > 1e-6) schema_error(qp, "quaternion must be unit within 1e-6");
  return Pose::from_quaternion(quat.normalized(), t);
}

Json pose_to_json(const Pose& pose) {
  const Quat q = pose.quaternion();
  return Json{{"translation", {pose.translation.x(), pose.translation.y(), pose.translation.z()}},
              {"rotation_quaternion", {q.w(), q.x(), q.y(), q.z()}}};
}

Scene parse_scene(const Json& j) {
  if (!j.is_object()) schema_error("$", "expected an object");
  Scene scene;
  if (j.contains("spheres")) {
    const Json& spheres = array_field(j, "$", "spheres");
    for (std::size_t i = 0; i < spheres.size(); ++i) {
      const std::string p = "$.spheres[" + std::to_string(i) + "]";
      const Vec3 c = vec3(field(spheres[i], p, "center"), p + ".center");
      const double r = number_field(spheres[i], p, "radius");
      scene.spheres.push_back(rethrow_as_schema(p, [&] { return geometry::make_sphere(c, r); }));
    }
  }
  if (j.contains("obstacles")) {
    const Json& obstacles = array_field(j, "$", "obstacles");
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      const std::string p = "$.obstacles[" + std::to_string(i) + "]";
      const Json& o = obstacles[i];
      const Json& kind = field(o, p, "kind");
      const Pose pose = o.contains("pose") ? parse_pose(o["pose"], p + ".pose") : Pose{};
      if (kind == "box") {
        const Vec3 he = vec3(field(o, p, "half_extents"), p + ".half_extents");
        scene.obstacles.push_back(
            rethrow_as_schema(p, [&] { return geometry::ConvexObstacle::box(pose, he); }));
      } else if (kind == "tetrahedron") {
        const Json& v = field(o, p, "vertices");
        if (!v.is_array() || v.size() != 4) schema_error(p + ".vertices", "expected 4 vertices");
        std::array<Vec3, 4> verts;
        for (std::size_t k = 0; k < 4; ++k) {
          verts[k] = vec3(v[k], p + ".vertices[" + std::to_string(k) + "]");
        }
        scene.obstacles.push_back(
            rethrow_as_schema(p, [&] { return geometry::ConvexObstacle::tetrahedron(pose, verts); }));
      } else {
        schema_error(p + ".kind", "expected \"box\" or \"tetrahedron\"");
      }
    }
  }
  return scene;
}

SensorSpec parse_sensor_spec(const Json& j) {
  const std::string path = "$";
  if (!j.is_object()) schema_error(path, "expected an object");
  SensorSpec s;
  const Json& cam = field(j, path, "camera");
  s.camera = rethrow_as_schema(path + ".camera", [&] {
    return error_model::make_gaussian(number_field(cam, path + ".camera", "mean"),
                                      number_field(cam, path + ".camera", "sigma"));
  });
  s.end_effector_mean = optional_number(j, path, "end_effector_mean", 0.0);
  if (j.contains("chain")) {
    const Json& chain = array_field(j, path, "chain");
    if (!chain.empty()) s.chain = parse_chain(chain, path + ".chain");
  }
  const std::size_t joints = s.chain ? s.chain->size() : 0;
  if (j.contains("angles")) {
    const Json& a = array_field(j, path, "angles");
    if (a.size() != joints) schema_error(path + ".angles", "length must equal the chain length");
    for (std::size_t i = 0; i < a.size(); ++i) {
      s.angles.push_back(number(a[i], path + ".angles[" + std::to_string(i) + "]"));
    }
  } else {
    s.angles.assign(joints, 0.0);
  }
  s.delay_s = number_field(j, path, "delay_s");
  if (s.delay_s < 0.0) schema_error(path + ".delay_s", "must be >= 0");
  s.max_speed_mps = number_field(j, path, "max_speed_mps");
  if (s.max_speed_mps < 0.0) schema_error(path + ".max_speed_mps", "must be >= 0");
  s.probability = number_field(j, path, "probability");
  if (!(s.probability > 0.0 && s.probability < 1.0)) {
    schema_error(path + ".probability", "probability out of range (need 0 < p < 1)");
  }
  return s;
}

Scenario parse_scenario(const Json& j) {
  const std::string path = "$";
  if (!j.is_object()) schema_error(path, "expected an object");
  Scenario s;
  s.source = j;
  s.world = parse_scene(j);
  s.tick_hz = j.contains("tick_hz") ? integer(j["tick_hz"], "$.tick_hz") : 100;
  if (s.tick_hz <= 0) schema_error("$.tick_hz", "must be > 0");
  s.uplink_delay_ticks = integer(field(j, path, "uplink_delay_ticks"), "$.uplink_delay_ticks");
  s.downlink_delay_ticks = integer(field(j, path, "downlink_delay_ticks"), "$.downlink_delay_ticks");
  if (s.uplink_delay_ticks < 0) schema_error("$.uplink_delay_ticks", "must be >= 0");
  if (s.downlink_delay_ticks < 0) schema_error("$.downlink_delay_ticks", "must be >= 0");
  s.finger_radius = number_field(j, path, "finger_radius");
  if (s.finger_radius <= 0.0) schema_error("$.finger_radius", "must be > 0");
  s.finger_gap = number_field(j, path, "finger_gap");
  if (s.finger_gap <= 0.0) schema_error("$.finger_gap", "must be > 0");
  s.max_speed_mps = number_field(j, path, "max_speed_mps");
  if (s.max_speed_mps < 0.0) schema_error("$.max_speed_mps", "must be >= 0");
  s.max_angular_speed_rps = optional_number(j, path, "max_angular_speed_rps", 1.0);
  {
    const Json& spec = field(j, path, "error_spec");
    try {
      s.error_spec = parse_sensor_spec(spec);
    } catch (const Error& e) {
      std::string msg = e.what();
      if (msg.rfind("$", 0) == 0) msg.replace(0, 1, "$.error_spec");
      throw Error(ErrorCode::Schema, msg);
    }
  }
  if (j.contains("initial_pose")) s.initial_pose = parse_pose(j["initial_pose"], "$.initial_pose");
  if (j.contains("approach")) {
    const Json& a = j["approach"];
    ApproachSpec ap;
    ap.velocity = vec3(field(a, "$.approach", "velocity"), "$.approach.velocity");
    ap.start_jitter_m = optional_number(a, "$.approach", "start_jitter_m", 0.0);
    if (ap.start_jitter_m < 0.0) schema_error("$.approach.start_jitter_m", "must be >= 0");
    ap.max_ticks = a.contains("max_ticks") ? integer(a["max_ticks"], "$.approach.max_ticks") : 1000;
    if (ap.max_ticks <= 0) schema_error("$.approach.max_ticks", "must be > 0");
    s.approach = ap;
  }
  if (j.contains("stiffness")) {
    const Json& st = j["stiffness"];
    s.stiffness = rethrow_as_schema("$.stiffness", [&] {
      return haptics::make_stiffness_config(number_field(st, "$.stiffness", "saturation_volume"),
                                            optional_number(st, "$.stiffness", "baseline", 0.0));
    });
  }
  return s;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::Schema, path.string() + ": " + e.what());
  }
}

error_model::GaussianSpec end_effector_error(const SensorSpec& spec) {
  if (!spec.chain) return {spec.end_effector_mean, 0.0};
  auto g = error_model::propagate_position_error(*spec.chain, spec.angles);
  g.mean = spec.end_effector_mean;
  return g;
}

error_model::ErrorBudget compute_budget(const SensorSpec& spec, std::optional<double> probability) {
  const double delay = error_model::delay_displacement(Vec3(spec.max_speed_mps, 0.0, 0.0),
                                                       spec.delay_s);
  return error_model::enlargement_distance(spec.camera, end_effector_error(spec), delay,
                                           probability.value_or(spec.probability));
}

}  // namespace teleop::scenario
