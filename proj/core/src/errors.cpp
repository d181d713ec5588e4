#include "teleop/errors.hpp"

namespace teleop {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateObstacle: return "DegenerateObstacle";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NegativeDistance: return "NegativeDistance";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NegativeDelay: return "NegativeDelay";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::NegativeVolume: return "NegativeVolume";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Schema: return "Schema";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace teleop
