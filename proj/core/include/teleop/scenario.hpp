#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "teleop/error_model.hpp"
#include "teleop/geometry.hpp"
#include "teleop/haptics.hpp"
#include "teleop/pose.hpp"

namespace teleop::scenario {

using Json = nlohmann::json;

struct Scene {
  std::vector<geometry::SphereProxy> spheres;
  std::vector<geometry::ConvexObstacle> obstacles;
};

struct SensorSpec {
  error_model::GaussianSpec camera;
  double end_effector_mean = 0.0;
  std::optional<error_model::KinematicChain> chain;
  std::vector<double> angles;  // configuration the chain error is evaluated at
  double delay_s = 0.0;
  double max_speed_mps = 0.0;
  double probability = 0.5;
};

/// Straight-line approach used by the trial harness.
struct ApproachSpec {
  Vec3 velocity = Vec3::Zero();
  double start_jitter_m = 0.0;
  int max_ticks = 1000;
};

struct Scenario {
  Scene world;
  int tick_hz = 100;
  int uplink_delay_ticks = 0;
  int downlink_delay_ticks = 0;
  double finger_radius = 0.01;
  double finger_gap = 0.06;
  double max_speed_mps = 0.25;
  double max_angular_speed_rps = 1.0;
  SensorSpec error_spec;
  Pose initial_pose;
  std::optional<ApproachSpec> approach;
  std::optional<haptics::StiffnessMapConfig> stiffness;
  /// The document this scenario was parsed from, kept for manifests.
  Json source;

  double tick_seconds() const { return 1.0 / tick_hz; }
};

/// All parse functions throw Error{Schema} with the offending field path.
Pose parse_pose(const Json& j, const std::string& path);
Scene parse_scene(const Json& j);
SensorSpec parse_sensor_spec(const Json& j);
Scenario parse_scenario(const Json& j);

/// Reads and parses a JSON file; syntax errors carry line and column.
Json read_json_file(const std::filesystem::path& path);

Json pose_to_json(const Pose& pose);

/// End-effector error propagated through the chain at the configured angles
/// (zero when no chain is given).
error_model::GaussianSpec end_effector_error(const SensorSpec& spec);

/// Enlargement budget for the sensor spec, optionally at a different probability.
error_model::ErrorBudget compute_budget(const SensorSpec& spec,
                                        std::optional<double> probability = std::nullopt);

}  // namespace teleop::scenario
