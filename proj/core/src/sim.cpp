#include "teleop/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "teleop/errors.hpp"
#include "teleop/random.hpp"

namespace teleop::sim {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

Vec3 limit_norm(const Vec3& v, double max_norm, bool& changed) {
  const double n = v.norm();
  if (n > max_norm) {
    changed = true;
    return n > 0.0 ? Vec3(v * (max_norm / n)) : Vec3::Zero();
  }
  return v;
}

double finger_overlap(const geometry::SphereProxy& finger,
                      const std::vector<geometry::ConvexObstacle>& obstacles) {
  double total = 0.0;
  for (const auto& o : obstacles) total += geometry::overlap_volume(finger, o);
  return total;
}

}  // namespace

OperatorInput clamp_input(OperatorInput in, double max_speed, double max_angular_speed) {
  bool changed = false;
  in.lin = limit_norm(in.lin, max_speed, changed);
  in.ang = limit_norm(in.ang, max_angular_speed, changed);
  const double grip = clamp01(in.grip);
  const std::array<double, 2> trig{clamp01(in.trig[0]), clamp01(in.trig[1])};
  changed = changed || grip != in.grip || trig != in.trig;
  in.grip = grip;
  in.trig = trig;
  in.clamped = in.clamped || changed;
  return in;
}

geometry::SphereProxy WorldState::finger(Side side) const {
  return {ee_pose.apply(fingers.offset(side)), fingers.radius};
}

geometry::SphereProxy WorldState::believed_finger(Side side) const {
  return {ee_pose.apply(fingers.offset(side)) + ee_offset, fingers.radius};
}

WorldState initial_state(const scenario::Scenario& sc) {
  WorldState s;
  s.ee_pose = sc.initial_pose;
  s.fingers = {sc.finger_radius, sc.finger_gap};
  s.obstacles = sc.world.obstacles;
  s.believed_obstacles = sc.world.obstacles;
  return s;
}

double scenario_enlargement(const scenario::Scenario& sc, std::optional<double> probability) {
  return std::max(0.0, scenario::compute_budget(sc.error_spec, probability).enlargement_distance);
}

SimConfig make_config(const scenario::Scenario& sc, double enlargement) {
  if (!(enlargement >= 0.0) || !std::isfinite(enlargement)) {
    throw Error(ErrorCode::InvalidArgument, "enlargement distance must be finite and >= 0");
  }
  if (!(enlargement < 0.5 * sc.finger_gap)) {
    std::ostringstream msg;
    msg << "enlargement distance " << enlargement << " m must be below half the finger gap ("
        << 0.5 * sc.finger_gap << " m) or the enlarged fingers interfere";
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
  SimConfig c;
  c.dt = sc.tick_seconds();
  c.enlargement = enlargement;
  c.stiffness = sc.stiffness.value_or(haptics::make_stiffness_config(
      enlargement > 0.0 ? haptics::shell_volume(sc.finger_radius, enlargement)
                        : geometry::SphereProxy{Vec3::Zero(), sc.finger_radius}.volume()));
  c.max_speed = sc.max_speed_mps;
  c.max_angular_speed = sc.max_angular_speed_rps;
  return c;
}

std::pair<WorldState, SimTickRecord> step(const WorldState& state, InputQueue& uplink,
                                          const SimConfig& config) {
  WorldState next = state;
  next.tick = state.tick + 1;
  if (auto due = uplink.pop_due(next.tick)) next.held = *due;

  const OperatorInput& in = next.held.input;
  next.ee_pose.translation += in.lin * config.dt;
  const double ang = in.ang.norm();
  if (ang > 0.0) {
    next.ee_pose.rotation =
        Eigen::AngleAxisd(ang * config.dt, in.ang / ang).toRotationMatrix() * next.ee_pose.rotation;
  }
  if (!next.ee_pose.is_finite()) {
    std::ostringstream msg;
    msg << "end-effector pose became non-finite at tick " << next.tick;
    throw Error(ErrorCode::NonFinite, msg.str());
  }

  SimTickRecord rec;
  rec.tick = next.tick;
  rec.input = next.held;
  rec.pose = next.ee_pose;
  for (const Side side : {kLeft, kRight}) {
    const auto believed = geometry::enlarge(next.believed_finger(side), config.enlargement);
    rec.overlap[side] = finger_overlap(believed, next.believed_obstacles);
    const auto actual = next.finger(side);
    rec.contact[side] = std::any_of(next.obstacles.begin(), next.obstacles.end(),
                                    [&](const auto& o) {
                                      return geometry::overlap_volume(actual, o) > 0.0;
                                    });
    if (rec.contact[side] && !state.contact[side]) ++next.contacts_cum;
  }
  next.contact = rec.contact;
  const auto cmd =
      haptics::map_overlap_to_stiffness(rec.overlap[kLeft], rec.overlap[kRight], config.stiffness);
  rec.stiffness = {cmd.left, cmd.right};
  rec.contacts_cum = next.contacts_cum;
  return {std::move(next), rec};
}

WorldState inject_estimation_error(const WorldState& state, const error_model::GaussianSpec& camera,
                                   const error_model::GaussianSpec& end_effector,
                                   std::uint64_t seed) {
  WorldState out = state;
  CounterRng rng(derive_key(seed, 0xE5710A7E));
  const double ee_mag = end_effector.mean + end_effector.sigma * rng.normal();
  out.ee_offset = ee_mag * rng.unit_vector();
  out.believed_obstacles.clear();
  for (const auto& o : state.obstacles) {
    const double mag = camera.mean + camera.sigma * rng.normal();
    out.believed_obstacles.push_back(o.moved(Pose::from_translation(mag * rng.unit_vector())));
  }
  return out;
}

double min_clearance(const WorldState& state) {
  double best = std::numeric_limits<double>::infinity();
  for (const Side side : {kLeft, kRight}) {
    const auto f = state.finger(side);
    for (const auto& o : state.obstacles) best = std::min(best, geometry::clearance(f, o));
  }
  return best;
}

}  // namespace teleop::sim
