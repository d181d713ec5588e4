#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace teleop::haptics {

struct StiffnessMapConfig {
  double saturation_volume = 1.0;  // m^3 of overlap giving stiffness 1
  double baseline = 0.0;           // stiffness at zero overlap
};

/// Throws Error{InvalidArgument} unless saturation_volume > 0 and
/// 0 <= baseline < 1.
StiffnessMapConfig make_stiffness_config(double saturation_volume, double baseline = 0.0);

/// Volume of the shell between the finger sphere and its enlarged copy,
/// (4 pi / 3)((r + d)^3 - r^3). Used as the default saturation volume.
double shell_volume(double radius, double enlargement);

struct StiffnessCommand {
  double left = 0.0;
  double right = 0.0;
  double left_volume = 0.0;
  double right_volume = 0.0;
};

/// Linear law clamp(baseline + (1 - baseline) * v / v_sat, baseline, 1), per
/// trigger. Throws Error{NegativeVolume}.
StiffnessCommand map_overlap_to_stiffness(double left_volume, double right_volume,
                                          const StiffnessMapConfig& config);

/// Per-trigger parameter block sent to an adaptive-trigger controller:
///   [0] mode     0x01 (continuous resistance)
///   [1] start    0x00 (resistance from the resting position)
///   [2] force    round-half-up(stiffness * 255)
///   [3..10]      0x00 (unused parameters of the effect slot)
inline constexpr std::size_t kTriggerBlockSize = 11;
inline constexpr std::uint8_t kModeContinuousResistance = 0x01;
using TriggerBlock = std::array<std::uint8_t, kTriggerBlockSize>;

struct TriggerEffect {
  TriggerBlock left{};
  TriggerBlock right{};
};

std::uint8_t force_byte(double stiffness);
TriggerEffect encode_trigger_effect(const StiffnessCommand& cmd);

/// Lowercase hex, two characters per byte.
std::string to_hex(const TriggerBlock& block);

/// One-way device interface; hardware drivers implement this.
class FeedbackSink {
 public:
  virtual ~FeedbackSink() = default;
  virtual void set_trigger_effect(const TriggerBlock& left, const TriggerBlock& right) = 0;
};

}  // namespace teleop::haptics
