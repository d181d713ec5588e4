#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "teleop/scenario.hpp"
#include "teleop/sim.hpp"
#include "teleop/trace.hpp"

namespace teleop::sim {

enum class Policy { StopOnOverlap, OperatorTrace };

std::string_view to_string(Policy p);
Policy policy_from_string(std::string_view s);

/// Operator commands keyed by the tick they are issued at; between entries
/// the last command is held.
struct InputTrace {
  std::vector<std::pair<std::int64_t, OperatorInput>> commands;

  /// Command in force at `tick` (zero input before the first entry).
  OperatorInput at(std::int64_t tick) const;
  std::int64_t last_tick() const { return commands.empty() ? -1 : commands.back().first; }
};

/// JSON Lines, one {"tick":t,"seq":n,"lin":[..],"ang":[..],"grip":g,"trig":[l,r]}
/// per line with strictly increasing ticks.
InputTrace parse_input_trace(std::istream& in);
InputTrace load_input_trace(const std::filesystem::path& path);

struct EpisodeSpec {
  Policy policy = Policy::StopOnOverlap;
  const InputTrace* trace = nullptr;
  double enlargement = 0.0;
  bool inject_errors = true;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
};

struct EpisodeResult {
  std::uint64_t index = 0;
  bool contact = false;
  std::int64_t first_contact_tick = -1;
  bool stopped = false;
  double min_clearance = 0.0;  // true surface gap at the end of the episode
  std::int64_t ticks = 0;
  double duration_s = 0.0;
};

/// Start position of episode `index`: the initial pose shifted along the
/// approach direction by a uniform jitter in [-start_jitter_m, start_jitter_m].
Vec3 episode_start(const scenario::Scenario& sc, std::uint64_t seed, std::uint64_t index);

using RecordSink = std::function<void(const SimTickRecord&)>;

/// Runs one episode. The operator issues a command every tick from the state
/// visible through the downlink delay; commands reach the robot through the
/// uplink delay.
EpisodeResult run_episode(const scenario::Scenario& sc, const EpisodeSpec& spec,
                          const RecordSink& sink = {});

struct TrialOptions {
  std::uint64_t n = 1;
  Policy policy = Policy::StopOnOverlap;
  std::uint64_t seed = 0;
  std::optional<double> probability;
  const InputTrace* trace = nullptr;
  bool inject_errors = true;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct TrialSummary {
  std::uint64_t n = 0;
  Policy policy = Policy::StopOnOverlap;
  std::uint64_t seed = 0;
  double probability = 0.5;
  double enlargement = 0.0;
  std::uint64_t contacts = 0;
  double contact_rate = 0.0;
  std::uint64_t stopped = 0;
  double mean_min_clearance = 0.0;
  double min_min_clearance = 0.0;
  double mean_duration_s = 0.0;
};

/// Independent randomized episodes; the summary is identical for any thread
/// count.
TrialSummary run_trials(const scenario::Scenario& sc, const TrialOptions& options);

OrderedJson summary_to_json(const TrialSummary& s);

}  // namespace teleop::sim
