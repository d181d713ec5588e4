#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

#include "teleop/errors.hpp"
#include "teleop/pose.hpp"

namespace teleop::protocol {

using OrderedJson = nlohmann::ordered_json;

inline constexpr int kProtocolVersion = 1;

enum class WireError { Busy, Schema, Seq };

std::string_view to_string(WireError code);

/// Client greeting; the server answers with a hello whose `session` object
/// describes the scene and timing.
struct Hello {
  int proto = kProtocolVersion;
  std::string client;
  std::optional<OrderedJson> session;
};

struct Input {
  std::int64_t seq = 0;
  Vec3 lin = Vec3::Zero();
  Vec3 ang = Vec3::Zero();
  double grip = 0.0;
  std::array<double, 2> trig{0.0, 0.0};
  std::int64_t t_ms = 0;
};

struct State {
  std::int64_t tick = 0;
  std::int64_t ack_seq = 0;
  bool clamped = false;
  Vec3 t = Vec3::Zero();
  std::array<double, 4> q{1.0, 0.0, 0.0, 0.0};  // w, x, y, z
  std::array<double, 2> overlap{0.0, 0.0};
  std::array<double, 2> stiff{0.0, 0.0};
  std::array<std::string, 2> trigger_fx;
  std::array<bool, 2> contact{false, false};
  std::int64_t contacts_cum = 0;
  std::uint64_t dropped = 0;
};

enum class ControlCmd { Reset, Pause, Resume, SetP };

std::string_view to_string(ControlCmd cmd);

struct Control {
  ControlCmd cmd = ControlCmd::Pause;
  std::optional<double> value;
};

/// A request when all fields are empty, a reply otherwise.
struct Metrics {
  struct Values {
    std::uint64_t episodes = 0;
    std::uint64_t contacts = 0;
    double duration_s = 0.0;
  };
  std::optional<Values> values;
};

struct ErrorMessage {
  WireError code = WireError::Schema;
  std::string detail;
};

using Message = std::variant<Hello, Input, State, Control, Metrics, ErrorMessage>;

/// Parse failure carrying the wire error code to reply with.
class ProtocolError : public Error {
 public:
  ProtocolError(WireError wire, const std::string& what)
      : Error(ErrorCode::Schema, what), wire_(wire) {}
  WireError wire() const noexcept { return wire_; }

 private:
  WireError wire_;
};

/// Throws ProtocolError{Schema} for malformed JSON, unknown "type" values and
/// missing or mistyped fields.
Message parse_message(std::string_view text);

/// Compact JSON with keys in the documented order; serialize(parse(m)) == m
/// for every message already in this form.
std::string serialize(const Message& message);
OrderedJson to_json(const Message& message);

std::string_view type_name(const Message& message);

}  // namespace teleop::protocol
