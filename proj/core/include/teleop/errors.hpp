#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace teleop {

enum class ErrorCode {
  DegenerateObstacle,
  NonFinite,
  NegativeDistance,
  LengthMismatch,
  NegativeDelay,
  ProbabilityOutOfRange,
  NegativeVolume,
  InvalidArgument,
  Schema,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; the code identifies the contract
/// that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace teleop
