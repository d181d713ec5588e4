#include <gtest/gtest.h>

#include <string>

#include "oracles.hpp"
#include "teleop/errors.hpp"
#include "teleop/scenario.hpp"

using namespace teleop;
using namespace teleop::scenario;

namespace {

std::string schema_message(const Json& j, Scenario (*parse)(const Json&)) {
  try {
    parse(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Schema);
    return e.what();
  }
  ADD_FAILURE() << "no error for " << j.dump();
  return {};
}

Scenario parse_any(const Json& j) { return parse_scenario(j); }

}  // namespace

TEST(Scenario, ShippedFilesParse) {
  const auto spec = parse_sensor_spec(read_json_file(TELEOP_DATA_DIR "/sensor_spec.json"));
  const auto budget = compute_budget(spec);
  EXPECT_NEAR(budget.end_effector.sigma, 0.003, 1e-15);
  EXPECT_NEAR(budget.delay_displacement, 0.01, 1e-17);
  EXPECT_NEAR(budget.enlargement_distance, 0.01 + 0.005 * oracle::inverse_normal_cdf(0.99), 1e-15);

  const auto sc = parse_scenario(read_json_file(TELEOP_DATA_DIR "/harness_scenario.json"));
  EXPECT_EQ(sc.uplink_delay_ticks, 5);
  EXPECT_EQ(sc.world.obstacles.size(), 1u);
  ASSERT_TRUE(sc.approach.has_value());
  EXPECT_EQ(sc.approach->max_ticks, 400);

  const auto scene = parse_scene(read_json_file(TELEOP_DATA_DIR "/scene.json"));
  EXPECT_EQ(scene.spheres.size(), 3u);
  EXPECT_EQ(scene.obstacles.size(), 2u);
}

TEST(Scenario, ProbabilityOverride) {
  auto spec = parse_sensor_spec(read_json_file(TELEOP_DATA_DIR "/sensor_spec.json"));
  EXPECT_NEAR(compute_budget(spec, 0.5).enlargement_distance, 0.01, 1e-17);
}

TEST(Scenario, SchemaErrorsNameTheField) {
  Json base = read_json_file(TELEOP_DATA_DIR "/harness_scenario.json");

  Json j = base;
  j.erase("finger_radius");
  EXPECT_NE(schema_message(j, parse_any).find("$.finger_radius"), std::string::npos);

  j = base;
  j["uplink_delay_ticks"] = 1.5;
  EXPECT_NE(schema_message(j, parse_any).find("$.uplink_delay_ticks"), std::string::npos);

  j = base;
  j["obstacles"][0]["kind"] = "cylinder";
  EXPECT_NE(schema_message(j, parse_any).find("$.obstacles[0].kind"), std::string::npos);

  j = base;
  j["obstacles"][0]["half_extents"] = {1, 0, 1};
  EXPECT_NE(schema_message(j, parse_any).find("$.obstacles[0]"), std::string::npos);

  j = base;
  j["error_spec"]["probability"] = 1.0;
  EXPECT_NE(schema_message(j, parse_any).find("$.error_spec.probability"), std::string::npos);

  j = base;
  j["error_spec"]["camera"]["sigma"] = -1;
  EXPECT_NE(schema_message(j, parse_any).find("$.error_spec.camera"), std::string::npos);

  j = base;
  j["obstacles"][0]["pose"]["rotation_quaternion"] = {1, 1, 0, 0};
  EXPECT_NE(schema_message(j, parse_any).find("rotation_quaternion"), std::string::npos);

  j = base;
  j["approach"]["velocity"] = {1, 2};
  EXPECT_NE(schema_message(j, parse_any).find("$.approach.velocity"), std::string::npos);
}

TEST(Scenario, PoseRoundTrip) {
  const Json j = {{"translation", {0.1, -0.2, 0.3}},
                  {"rotation_quaternion", {0.9238795325112867, 0, 0, 0.3826834323650898}}};
  const Pose p = parse_pose(j, "$");
  const Pose back = parse_pose(pose_to_json(p), "$");
  EXPECT_TRUE(back.rotation.isApprox(p.rotation, 1e-15));
  EXPECT_TRUE(back.translation.isApprox(p.translation, 1e-15));
}

TEST(Scenario, MissingFileIsIo) {
  try {
    read_json_file("/nonexistent/scenario.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}
