#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "teleop/errors.hpp"
#include "teleop/haptics.hpp"

using namespace teleop;
using namespace teleop::haptics;

TEST(StiffnessMap, LinearLawCases) {
  const auto cfg = make_stiffness_config(2e-6);
  auto c = map_overlap_to_stiffness(0, 0, cfg);
  EXPECT_EQ(c.left, 0.0);
  EXPECT_EQ(c.right, 0.0);
  c = map_overlap_to_stiffness(2e-6, 2e-6, cfg);
  EXPECT_EQ(c.left, 1.0);
  EXPECT_EQ(c.right, 1.0);
  c = map_overlap_to_stiffness(1e-6, 0, cfg);
  EXPECT_DOUBLE_EQ(c.left, 0.5);
  EXPECT_EQ(c.right, 0.0);
  EXPECT_EQ(c.left_volume, 1e-6);
}

TEST(StiffnessMap, SaturatesAndIsMonotone) {
  const auto cfg = make_stiffness_config(1.0, 0.2);
  EXPECT_DOUBLE_EQ(map_overlap_to_stiffness(0, 0, cfg).left, 0.2);
  EXPECT_EQ(map_overlap_to_stiffness(50, 3, cfg).left, 1.0);
  double prev = 0.0;
  for (double v = 0.0; v < 1.5; v += 0.01) {
    const double s = map_overlap_to_stiffness(v, 0, cfg).left;
    EXPECT_GE(s, prev);
    EXPECT_GE(s, 0.2);
    EXPECT_LE(s, 1.0);
    prev = s;
  }
}

TEST(StiffnessMap, Preconditions) {
  EXPECT_THROW(make_stiffness_config(0.0), Error);
  EXPECT_THROW(make_stiffness_config(1.0, 1.0), Error);
  EXPECT_THROW(make_stiffness_config(1.0, -0.1), Error);
  try {
    map_overlap_to_stiffness(-1e-9, 0, make_stiffness_config(1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NegativeVolume);
  }
}

TEST(StiffnessMap, ShellVolume) {
  EXPECT_NEAR(shell_volume(0.01, 0.02), 4.0 / 3.0 * std::numbers::pi * (2.7e-5 - 1e-6), 1e-18);
}

TEST(TriggerEncoding, ForceByteRounding) {
  EXPECT_EQ(force_byte(0.0), 0x00);
  EXPECT_EQ(force_byte(1.0), 0xFF);
  EXPECT_EQ(force_byte(0.5), 0x80);
  EXPECT_EQ(force_byte(1.0 / 255.0), 0x01);
  EXPECT_EQ(force_byte(0.5 / 255.0), 0x01);
  EXPECT_EQ(force_byte(0.49 / 255.0), 0x00);
  EXPECT_EQ(force_byte(2.0), 0xFF);
  EXPECT_EQ(force_byte(-1.0), 0x00);
}

TEST(TriggerEncoding, BlockLayout) {
  const auto fx = encode_trigger_effect({0.5, 0.0, 0.0, 0.0});
  EXPECT_EQ(fx.left[0], kModeContinuousResistance);
  EXPECT_EQ(fx.left[1], 0x00);
  EXPECT_EQ(fx.left[2], 0x80);
  for (std::size_t i = 3; i < kTriggerBlockSize; ++i) EXPECT_EQ(fx.left[i], 0x00);
  EXPECT_EQ(fx.right[2], 0x00);
  EXPECT_EQ(to_hex(fx.left), "0100800000000000000000");
  EXPECT_EQ(to_hex(fx.right), "0100000000000000000000");
  EXPECT_EQ(to_hex(encode_trigger_effect({1.0, 1.0, 0, 0}).right), "0100ff0000000000000000");
}
