#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "teleop/error_model.hpp"
#include "teleop/geometry.hpp"
#include "teleop/haptics.hpp"
#include "teleop/latency_queue.hpp"
#include "teleop/scenario.hpp"

namespace teleop::sim {

enum Side : std::size_t { kLeft = 0, kRight = 1 };

struct OperatorInput {
  std::int64_t seq = 0;
  Vec3 lin = Vec3::Zero();  // m/s, world frame
  Vec3 ang = Vec3::Zero();  // rad/s, world frame
  double grip = 0.0;
  std::array<double, 2> trig{0.0, 0.0};
  std::int64_t t_ms = 0;
  bool clamped = false;

  friend bool operator==(const OperatorInput&, const OperatorInput&) = default;
};

/// Scales linear and angular velocity down to the maxima and clamps grip and
/// trigger values to [0, 1]; sets `clamped` when anything changed.
OperatorInput clamp_input(OperatorInput in, double max_speed, double max_angular_speed);

/// An input together with the tick it was issued at; -1 for the implicit zero
/// input held before anything arrives.
struct IssuedInput {
  std::int64_t issued_tick = -1;
  OperatorInput input;

  friend bool operator==(const IssuedInput&, const IssuedInput&) = default;
};

using InputQueue = LatencyQueue<IssuedInput>;

/// Two finger spheres rigidly attached to the end effector along its local y
/// axis; `gap` is the free space between the finger surfaces.
struct FingerLayout {
  double radius = 0.01;
  double gap = 0.06;

  Vec3 offset(Side side) const {
    const double y = 0.5 * gap + radius;
    return {0.0, side == kLeft ? y : -y, 0.0};
  }
};

struct WorldState {
  std::int64_t tick = -1;  // last completed tick
  Pose ee_pose;
  FingerLayout fingers;
  std::vector<geometry::ConvexObstacle> obstacles;
  /// The estimated world used for overlap and haptics.
  std::vector<geometry::ConvexObstacle> believed_obstacles;
  Vec3 ee_offset = Vec3::Zero();  // believed minus true end-effector position
  IssuedInput held;
  std::array<bool, 2> contact{false, false};
  std::int64_t contacts_cum = 0;

  geometry::SphereProxy finger(Side side) const;
  geometry::SphereProxy believed_finger(Side side) const;
};

struct SimConfig {
  double dt = 0.01;
  double enlargement = 0.0;
  haptics::StiffnessMapConfig stiffness;
  double max_speed = 0.25;
  double max_angular_speed = 1.0;
};

struct SimTickRecord {
  std::int64_t tick = 0;
  IssuedInput input;  // applied this tick
  Pose pose;
  std::array<double, 2> overlap{0.0, 0.0};  // enlarged, believed world
  std::array<double, 2> stiffness{0.0, 0.0};
  std::array<bool, 2> contact{false, false};  // unenlarged, true world
  std::int64_t contacts_cum = 0;
};

/// Builds the world with the believed world equal to the true one.
WorldState initial_state(const scenario::Scenario& sc);

/// Throws Error{InvalidArgument} unless 0 <= enlargement < finger_gap / 2.
SimConfig make_config(const scenario::Scenario& sc, double enlargement);

/// Enlargement from the scenario's sensor spec (negative quantiles clamp to 0).
double scenario_enlargement(const scenario::Scenario& sc, std::optional<double> probability = {});

/// Advances one tick: applies the input due from `uplink` (or holds the last
/// one), integrates the pose with explicit Euler, evaluates enlarged overlap
/// in the believed world and contact in the true world. Throws
/// Error{NonFinite} if the pose becomes non-finite.
std::pair<WorldState, SimTickRecord> step(const WorldState& state, InputQueue& uplink,
                                          const SimConfig& config);

/// Samples one camera offset per obstacle and one end-effector offset, each a
/// N(mean, sigma^2) magnitude along a uniformly random direction.
WorldState inject_estimation_error(const WorldState& state, const error_model::GaussianSpec& camera,
                                   const error_model::GaussianSpec& end_effector,
                                   std::uint64_t seed);

/// Smallest true surface gap over both fingers and all obstacles.
double min_clearance(const WorldState& state);

}  // namespace teleop::sim
