#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "teleop/scenario.hpp"
#include "teleop/sim.hpp"

namespace teleop::sim {

using OrderedJson = nlohmann::ordered_json;

inline constexpr int kTraceFormatVersion = 1;

/// Reproducibility header written before the records of every trace segment.
struct RunManifest {
  std::string subcommand;
  std::vector<std::string> inputs;
  std::uint64_t seed = 0;
  std::string output;
  int format_version = kTraceFormatVersion;
  std::uint64_t episode = 0;
  std::string policy;
  double probability = 0.5;
  double enlargement = 0.0;
  bool inject_errors = true;
  /// End-effector start position (the scenario's initial pose when absent).
  std::optional<Vec3> start_translation;
  /// Scenario document the segment was simulated from.
  scenario::Json scenario;
};

OrderedJson manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const scenario::Json& j);

OrderedJson input_to_json(const IssuedInput& in);
IssuedInput input_from_json(const scenario::Json& j);

/// One JSON object with the fixed field order tick, input, pose, overlap_l,
/// overlap_r, stiff_l, stiff_r, contact_l, contact_r, contacts_cum.
OrderedJson record_to_json(const SimTickRecord& rec);
std::string record_line(const SimTickRecord& rec);

/// Writes manifest / records / end marker lines.
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& out) : out_(&out) {}

  void begin(const RunManifest& manifest);
  void write(const SimTickRecord& rec);
  void end();

 private:
  std::ostream* out_;
  std::uint64_t records_ = 0;
  bool open_ = false;
};

/// Starting world of an episode: the scenario's initial pose moved to
/// `start_translation` and, when `inject_errors` is set, estimation errors
/// drawn from derive_key(seed, episode).
WorldState episode_state(const scenario::Scenario& sc, const Vec3& start_translation,
                         std::uint64_t seed, std::uint64_t episode, bool inject_errors);

WorldState segment_initial_state(const scenario::Scenario& sc, const RunManifest& manifest);

struct ReplayResult {
  bool identical = true;
  std::uint64_t records = 0;
  std::optional<std::int64_t> divergent_tick;
  std::string detail;
};

/// Re-simulates every segment from its recorded applied inputs and compares
/// each record byte for byte. Throws Error{Schema} on malformed or truncated
/// traces.
ReplayResult replay(std::istream& trace);

}  // namespace teleop::sim
