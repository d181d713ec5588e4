#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace teleop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDivergence = 1;
inline constexpr int kExitInputError = 2;

/// Entry point of the `teleop` command; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Entry point of `teleop-server`.
int run_server(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace teleop::cli
