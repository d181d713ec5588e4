#include "teleop/trials.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <thread>

#include "teleop/errors.hpp"
#include "teleop/random.hpp"

namespace teleop::sim {

namespace {

using scenario::Json;

constexpr std::uint64_t kJitterStream = 0x5A17D3E1;

Vec3 vec_from(const Json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array() || it->size() != 3) {
    throw Error(ErrorCode::Schema, where + "." + key + ": expected 3 numbers");
  }
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!(*it)[i].is_number()) throw Error(ErrorCode::Schema, where + "." + key + ": expected 3 numbers");
    v[i] = (*it)[i].get<double>();
  }
  return v;
}

/// Direction of decreasing clearance for the visible finger, or zero when no
/// believed obstacle is within the enlarged reach.
bool moving_into_overlap(const SimTickRecord& visible, const WorldState& state, const Vec3& velocity,
                         double enlargement) {
  for (const Side side : {kLeft, kRight}) {
    if (!(visible.overlap[side] > 0.0)) continue;
    const Vec3 center = visible.pose.apply(state.fingers.offset(side)) + state.ee_offset;
    const double reach = state.fingers.radius + enlargement;
    for (const auto& o : state.believed_obstacles) {
      if (geometry::distance(center, o) >= reach) continue;
      const Vec3 toward = geometry::closest_point(center, o) - center;
      if (velocity.dot(toward) > 0.0) return true;
      if (toward.squaredNorm() == 0.0 && velocity.squaredNorm() > 0.0) return true;
    }
  }
  return false;
}

}  // namespace

Vec3 episode_start(const scenario::Scenario& sc, std::uint64_t seed, std::uint64_t index) {
  Vec3 start = sc.initial_pose.translation;
  if (!sc.approach || sc.approach->start_jitter_m <= 0.0) return start;
  const Vec3 v = sc.approach->velocity;
  if (v.squaredNorm() == 0.0) return start;
  CounterRng rng(derive_key(derive_key(seed, index), kJitterStream));
  const double j = sc.approach->start_jitter_m;
  return start + v.normalized() * rng.uniform(-j, j);
}

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::StopOnOverlap: return "stop_on_overlap";
    case Policy::OperatorTrace: return "operator_trace";
  }
  return "unknown";
}

Policy policy_from_string(std::string_view s) {
  if (s == "stop_on_overlap") return Policy::StopOnOverlap;
  if (s == "operator_trace") return Policy::OperatorTrace;
  throw Error(ErrorCode::InvalidArgument, "unknown policy '" + std::string(s) + "'");
}

OperatorInput InputTrace::at(std::int64_t tick) const {
  const auto it = std::upper_bound(commands.begin(), commands.end(), tick,
                                   [](std::int64_t t, const auto& c) { return t < c.first; });
  if (it == commands.begin()) return {};
  return std::prev(it)->second;
}

InputTrace parse_input_trace(std::istream& in) {
  InputTrace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "input trace line " + std::to_string(lineno);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::Schema, where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("tick") || !j["tick"].is_number_integer() ||
        !j.contains("seq") || !j["seq"].is_number_integer()) {
      throw Error(ErrorCode::Schema, where + ": expected integer tick and seq");
    }
    const std::int64_t tick = j["tick"].get<std::int64_t>();
    OperatorInput cmd;
    cmd.seq = j["seq"].get<std::int64_t>();
    cmd.lin = j.contains("lin") ? vec_from(j, "lin", where) : Vec3::Zero();
    cmd.ang = j.contains("ang") ? vec_from(j, "ang", where) : Vec3::Zero();
    if (j.contains("grip")) {
      if (!j["grip"].is_number()) throw Error(ErrorCode::Schema, where + ".grip: expected a number");
      cmd.grip = j["grip"].get<double>();
    }
    if (j.contains("trig")) {
      const Json& t = j["trig"];
      if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_number()) {
        throw Error(ErrorCode::Schema, where + ".trig: expected 2 numbers");
      }
      cmd.trig = {t[0].get<double>(), t[1].get<double>()};
    }
    if (j.contains("t_ms") && j["t_ms"].is_number_integer()) cmd.t_ms = j["t_ms"].get<std::int64_t>();
    if (tick < 0) throw Error(ErrorCode::Schema, where + ".tick: must be >= 0");
    if (!trace.commands.empty()) {
      if (tick <= trace.commands.back().first) {
        throw Error(ErrorCode::Schema, where + ".tick: ticks must strictly increase");
      }
      if (cmd.seq <= trace.commands.back().second.seq) {
        throw Error(ErrorCode::Schema, where + ".seq: sequence numbers must strictly increase");
      }
    }
    trace.commands.emplace_back(tick, cmd);
  }
  return trace;
}

InputTrace load_input_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return parse_input_trace(in);
}

EpisodeResult run_episode(const scenario::Scenario& sc, const EpisodeSpec& spec,
                          const RecordSink& sink) {
  if (spec.policy == Policy::StopOnOverlap && !sc.approach) {
    throw Error(ErrorCode::InvalidArgument, "stop_on_overlap needs an \"approach\" in the scenario");
  }
  if (spec.policy == Policy::OperatorTrace && spec.trace == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "operator_trace needs an input trace");
  }
  const SimConfig config = make_config(sc, spec.enlargement);
  WorldState state = episode_state(sc, episode_start(sc, spec.seed, spec.index), spec.seed,
                                   spec.index, spec.inject_errors);
  InputQueue uplink(sc.uplink_delay_ticks);
  const std::int64_t k1 = sc.uplink_delay_ticks;
  const std::int64_t view_lag = std::max(sc.downlink_delay_ticks, 1);

  std::int64_t max_ticks = 0;
  if (spec.policy == Policy::StopOnOverlap) {
    max_ticks = sc.approach->max_ticks;
  } else {
    max_ticks = spec.trace->last_tick() + k1 + 1;
  }

  EpisodeResult result;
  result.index = spec.index;
  std::deque<SimTickRecord> history;
  std::int64_t stop_tick = -1;

  for (std::int64_t t = 0; t < max_ticks; ++t) {
    OperatorInput cmd;
    if (spec.policy == Policy::StopOnOverlap) {
      if (stop_tick < 0) {
        cmd.lin = sc.approach->velocity;
        const std::int64_t seen = t - view_lag;
        if (seen >= 0 && !history.empty()) {
          const SimTickRecord& visible = history[static_cast<std::size_t>(seen - history.front().tick)];
          if (moving_into_overlap(visible, state, cmd.lin, spec.enlargement)) {
            stop_tick = t;
            cmd.lin = Vec3::Zero();
          }
        }
      }
      cmd.seq = t + 1;
      cmd.t_ms = t * 1000 / sc.tick_hz;
    } else {
      cmd = spec.trace->at(t);
    }
    uplink.push(t, IssuedInput{t, clamp_input(cmd, sc.max_speed_mps, sc.max_angular_speed_rps)});

    auto [next, rec] = step(state, uplink, config);
    state = std::move(next);
    if ((rec.contact[kLeft] || rec.contact[kRight]) && result.first_contact_tick < 0) {
      result.first_contact_tick = rec.tick;
    }
    if (sink) sink(rec);
    history.push_back(rec);
    while (history.size() > static_cast<std::size_t>(view_lag) + 1) history.pop_front();
    result.ticks = rec.tick + 1;
    if (stop_tick >= 0 && rec.tick >= stop_tick + k1) break;
  }

  result.contact = result.first_contact_tick >= 0;
  result.stopped = stop_tick >= 0;
  result.min_clearance = min_clearance(state);
  result.duration_s = static_cast<double>(result.ticks) * config.dt;
  return result;
}

TrialSummary run_trials(const scenario::Scenario& sc, const TrialOptions& options) {
  if (options.n == 0) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  TrialSummary s;
  s.n = options.n;
  s.policy = options.policy;
  s.seed = options.seed;
  s.probability = options.probability.value_or(sc.error_spec.probability);
  s.enlargement = scenario_enlargement(sc, s.probability);

  std::vector<EpisodeResult> results(options.n);
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, options.n));

  std::vector<std::exception_ptr> failures(threads);
  auto work = [&](unsigned w) {
    try {
      for (std::uint64_t i = w; i < options.n; i += threads) {
        EpisodeSpec spec{options.policy, options.trace, s.enlargement, options.inject_errors,
                         options.seed, i};
        results[i] = run_episode(sc, spec);
      }
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  double clearance_sum = 0.0;
  double duration_sum = 0.0;
  s.min_min_clearance = std::numeric_limits<double>::infinity();
  for (const auto& r : results) {
    s.contacts += r.contact ? 1 : 0;
    s.stopped += r.stopped ? 1 : 0;
    clearance_sum += r.min_clearance;
    duration_sum += r.duration_s;
    s.min_min_clearance = std::min(s.min_min_clearance, r.min_clearance);
  }
  const double n = static_cast<double>(options.n);
  s.contact_rate = static_cast<double>(s.contacts) / n;
  s.mean_min_clearance = clearance_sum / n;
  s.mean_duration_s = duration_sum / n;
  return s;
}

OrderedJson summary_to_json(const TrialSummary& s) {
  OrderedJson j;
  j["n"] = s.n;
  j["policy"] = std::string(to_string(s.policy));
  j["seed"] = s.seed;
  j["probability"] = s.probability;
  j["enlargement"] = s.enlargement;
  j["contacts"] = s.contacts;
  j["contact_rate"] = s.contact_rate;
  j["stopped"] = s.stopped;
  j["mean_min_clearance"] = s.mean_min_clearance;
  j["min_min_clearance"] = s.min_min_clearance;
  j["mean_duration_s"] = s.mean_duration_s;
  return j;
}

}  // namespace teleop::sim
