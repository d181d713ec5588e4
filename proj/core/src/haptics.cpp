#include "teleop/haptics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "teleop/errors.hpp"

namespace teleop::haptics {

namespace {

double law(double volume, const StiffnessMapConfig& config) {
  if (!std::isfinite(volume)) throw Error(ErrorCode::NonFinite, "overlap volume is not finite");
  if (volume < 0.0) throw Error(ErrorCode::NegativeVolume, "overlap volume must be >= 0");
  if (volume >= config.saturation_volume) return 1.0;
  const double s = config.baseline + (1.0 - config.baseline) * volume / config.saturation_volume;
  return std::clamp(s, config.baseline, 1.0);
}

TriggerBlock block_for(double stiffness) {
  TriggerBlock b{};
  b[0] = kModeContinuousResistance;
  b[1] = 0x00;
  b[2] = force_byte(stiffness);
  return b;
}

}  // namespace

StiffnessMapConfig make_stiffness_config(double saturation_volume, double baseline) {
  if (!(saturation_volume > 0.0) || !std::isfinite(saturation_volume)) {
    throw Error(ErrorCode::InvalidArgument, "saturation volume must be > 0");
  }
  if (!(baseline >= 0.0 && baseline < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "baseline stiffness must be in [0, 1)");
  }
  return {saturation_volume, baseline};
}

double shell_volume(double radius, double enlargement) {
  const double outer = radius + enlargement;
  return 4.0 / 3.0 * std::numbers::pi * (outer * outer * outer - radius * radius * radius);
}

StiffnessCommand map_overlap_to_stiffness(double left_volume, double right_volume,
                                          const StiffnessMapConfig& config) {
  StiffnessCommand cmd;
  cmd.left = law(left_volume, config);
  cmd.right = law(right_volume, config);
  cmd.left_volume = left_volume;
  cmd.right_volume = right_volume;
  return cmd;
}

std::uint8_t force_byte(double stiffness) {
  const double s = std::clamp(stiffness, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(s * 255.0 + 0.5));
}

TriggerEffect encode_trigger_effect(const StiffnessCommand& cmd) {
  return {block_for(cmd.left), block_for(cmd.right)};
}

std::string to_hex(const TriggerBlock& block) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(block.size() * 2);
  for (const auto byte : block) {
    out.push_back(digits[byte >> 4]);
    out.push_back(digits[byte & 0x0F]);
  }
  return out;
}

}  // namespace teleop::haptics
