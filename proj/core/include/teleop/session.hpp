#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "teleop/haptics.hpp"
#include "teleop/protocol.hpp"
#include "teleop/scenario.hpp"
#include "teleop/sim.hpp"
#include "teleop/trace.hpp"

namespace teleop::protocol {

struct SessionOptions {
  std::uint64_t seed = 0;
  bool inject_errors = true;
  std::optional<double> probability;
  /// Trace destination; one manifest segment per episode.
  std::ostream* record = nullptr;
  std::vector<std::string> inputs;
  std::size_t max_buffered_frames = 64;
  haptics::FeedbackSink* feedback = nullptr;
};

/// Transport-independent operator session. All members are safe to call from
/// the connection context and the tick loop concurrently.
///
/// Inputs are stamped with the tick being computed next and applied
/// uplink_delay_ticks later; the state of tick t is released at
/// t + downlink_delay_ticks. A reset (or set_p) starts a new episode whose
/// ticks count from 0 again.
class Session {
 public:
  Session(scenario::Scenario sc, SessionOptions options);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Claims the session for a client. False when another client holds it.
  /// Starts the first episode, or resumes the current one with a zero input.
  bool connect();
  void disconnect();
  bool connected() const;
  bool running() const;

  /// Handles one inbound frame and returns the frames to send back right away
  /// (hello and metrics replies, errors).
  std::vector<std::string> handle(std::string_view frame);

  /// Advances one tick when connected and not paused. Returns false when idle.
  bool tick();

  /// Oldest buffered state frame, with the dropped counter filled in.
  std::optional<std::string> next_frame();
  std::size_t buffered_frames() const;

  Metrics::Values metrics() const;
  double enlargement() const;
  std::int64_t current_tick() const;
  const scenario::Scenario& scenario() const { return sc_; }

  /// Reply to a connection that cannot be served.
  static std::string busy_message();

  /// Ends the trace segment of the current episode.
  void close_record();

 private:
  void start_episode_locked();
  void end_episode_locked();
  std::vector<std::string> handle_locked(const Message& msg);
  OrderedJson session_info_locked() const;
  Metrics::Values metrics_locked() const;

  scenario::Scenario sc_;
  SessionOptions options_;
  mutable std::mutex mutex_;

  double probability_;
  double enlargement_ = 0.0;
  sim::SimConfig config_;
  sim::WorldState state_;
  sim::InputQueue uplink_;
  sim::LatencyQueue<State> downlink_;
  std::deque<State> outbound_;
  std::optional<sim::TraceWriter> writer_;

  bool connected_ = false;
  bool paused_ = false;
  bool episode_open_ = false;
  std::int64_t last_seq_ = 0;
  bool any_seq_ = false;
  std::uint64_t dropped_ = 0;
  std::uint64_t episodes_ = 0;
  std::uint64_t finished_contacts_ = 0;
  std::int64_t finished_ticks_ = 0;
};

/// State frame for one simulation record.
State make_state(const sim::SimTickRecord& rec);

}  // namespace teleop::protocol
