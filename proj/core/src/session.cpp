#include "teleop/session.hpp"

namespace teleop::protocol {

namespace {

std::string error_frame(WireError code, const std::string& detail) {
  return serialize(ErrorMessage{code, detail});
}

}  // namespace

State make_state(const sim::SimTickRecord& rec) {
  State s;
  s.tick = rec.tick;
  s.ack_seq = rec.input.input.seq;
  s.clamped = rec.input.input.clamped;
  s.t = rec.pose.translation;
  const Quat q = rec.pose.quaternion();
  s.q = {q.w(), q.x(), q.y(), q.z()};
  s.overlap = rec.overlap;
  s.stiff = rec.stiffness;
  const auto fx = haptics::encode_trigger_effect({rec.stiffness[0], rec.stiffness[1], 0.0, 0.0});
  s.trigger_fx = {haptics::to_hex(fx.left), haptics::to_hex(fx.right)};
  s.contact = rec.contact;
  s.contacts_cum = rec.contacts_cum;
  return s;
}

Session::Session(scenario::Scenario sc, SessionOptions options)
    : sc_(std::move(sc)),
      options_(std::move(options)),
      probability_(options_.probability.value_or(sc_.error_spec.probability)),
      uplink_(sc_.uplink_delay_ticks),
      downlink_(sc_.downlink_delay_ticks) {
  enlargement_ = sim::scenario_enlargement(sc_, probability_);
  config_ = sim::make_config(sc_, enlargement_);
  state_ = sim::initial_state(sc_);
  if (options_.record) writer_.emplace(*options_.record);
}

Session::~Session() { close_record(); }

void Session::close_record() {
  std::lock_guard lock(mutex_);
  if (writer_) writer_->end();
}

std::string Session::busy_message() {
  return error_frame(WireError::Busy, "another operator session is active");
}

void Session::start_episode_locked() {
  state_ = sim::episode_state(sc_, sc_.initial_pose.translation, options_.seed, episodes_,
                              options_.inject_errors);
  uplink_.clear();
  downlink_.clear();
  outbound_.clear();
  if (writer_) {
    sim::RunManifest m;
    m.subcommand = "serve";
    m.inputs = options_.inputs;
    m.seed = options_.seed;
    m.episode = episodes_;
    m.policy = "live";
    m.probability = probability_;
    m.enlargement = enlargement_;
    m.inject_errors = options_.inject_errors;
    m.scenario = sc_.source;
    writer_->begin(m);
  }
  ++episodes_;
  episode_open_ = true;
}

void Session::end_episode_locked() {
  if (!episode_open_) return;
  finished_contacts_ += static_cast<std::uint64_t>(state_.contacts_cum);
  finished_ticks_ += state_.tick + 1;
  if (writer_) writer_->end();
  episode_open_ = false;
}

bool Session::connect() {
  std::lock_guard lock(mutex_);
  if (connected_) return false;
  connected_ = true;
  paused_ = false;
  any_seq_ = false;
  if (!episode_open_) {
    start_episode_locked();
  } else {
    state_.held = sim::IssuedInput{};
    uplink_.clear();
  }
  return true;
}

void Session::disconnect() {
  std::lock_guard lock(mutex_);
  connected_ = false;
}

bool Session::connected() const {
  std::lock_guard lock(mutex_);
  return connected_;
}

bool Session::running() const {
  std::lock_guard lock(mutex_);
  return connected_ && !paused_;
}

bool Session::tick() {
  std::lock_guard lock(mutex_);
  if (!connected_ || paused_) return false;
  auto [next, rec] = sim::step(state_, uplink_, config_);
  state_ = std::move(next);
  if (writer_) writer_->write(rec);
  downlink_.push(rec.tick, make_state(rec));
  downlink_.drain_due(rec.tick, [&](State s) {
    if (options_.feedback) {
      const auto fx = haptics::encode_trigger_effect({s.stiff[0], s.stiff[1], 0.0, 0.0});
      options_.feedback->set_trigger_effect(fx.left, fx.right);
    }
    while (outbound_.size() >= options_.max_buffered_frames) {
      outbound_.pop_front();
      ++dropped_;
    }
    outbound_.push_back(std::move(s));
  });
  return true;
}

std::optional<std::string> Session::next_frame() {
  std::lock_guard lock(mutex_);
  if (outbound_.empty()) return std::nullopt;
  State s = std::move(outbound_.front());
  outbound_.pop_front();
  s.dropped = dropped_;
  return serialize(s);
}

std::size_t Session::buffered_frames() const {
  std::lock_guard lock(mutex_);
  return outbound_.size();
}

Metrics::Values Session::metrics() const {
  std::lock_guard lock(mutex_);
  return metrics_locked();
}

Metrics::Values Session::metrics_locked() const {
  Metrics::Values v;
  v.episodes = episodes_;
  v.contacts = finished_contacts_;
  std::int64_t ticks = finished_ticks_;
  if (episode_open_) {
    v.contacts += static_cast<std::uint64_t>(state_.contacts_cum);
    ticks += state_.tick + 1;
  }
  v.duration_s = static_cast<double>(ticks) * config_.dt;
  return v;
}

double Session::enlargement() const {
  std::lock_guard lock(mutex_);
  return enlargement_;
}

std::int64_t Session::current_tick() const {
  std::lock_guard lock(mutex_);
  return state_.tick;
}

OrderedJson Session::session_info_locked() const {
  OrderedJson j;
  j["tick_hz"] = sc_.tick_hz;
  j["uplink_delay_ticks"] = sc_.uplink_delay_ticks;
  j["downlink_delay_ticks"] = sc_.downlink_delay_ticks;
  j["finger_radius"] = sc_.finger_radius;
  j["finger_gap"] = sc_.finger_gap;
  j["max_speed_mps"] = sc_.max_speed_mps;
  j["probability"] = probability_;
  j["enlargement"] = enlargement_;
  j["episode"] = episodes_ == 0 ? 0 : episodes_ - 1;
  j["initial_pose"] = OrderedJson::parse(scenario::pose_to_json(sc_.initial_pose).dump());
  j["obstacles"] = OrderedJson::parse(sc_.source.value("obstacles", scenario::Json::array()).dump());
  return j;
}

std::vector<std::string> Session::handle(std::string_view frame) {
  Message msg;
  try {
    msg = parse_message(frame);
  } catch (const ProtocolError& e) {
    return {error_frame(e.wire(), e.what())};
  }
  std::lock_guard lock(mutex_);
  return handle_locked(msg);
}

std::vector<std::string> Session::handle_locked(const Message& msg) {
  if (const auto* hello = std::get_if<Hello>(&msg)) {
    if (hello->session) return {error_frame(WireError::Schema, "session info is server-to-client")};
    return {serialize(Hello{kProtocolVersion, "teleop-server", session_info_locked()})};
  }
  if (const auto* in = std::get_if<Input>(&msg)) {
    if (any_seq_ && in->seq <= last_seq_) {
      return {error_frame(WireError::Seq, "seq " + std::to_string(in->seq) + " is not greater than " +
                                              std::to_string(last_seq_) + "; input dropped")};
    }
    any_seq_ = true;
    last_seq_ = in->seq;
    sim::OperatorInput op;
    op.seq = in->seq;
    op.lin = in->lin;
    op.ang = in->ang;
    op.grip = in->grip;
    op.trig = in->trig;
    op.t_ms = in->t_ms;
    op = sim::clamp_input(op, sc_.max_speed_mps, sc_.max_angular_speed_rps);
    const std::int64_t arrival = state_.tick + 1;
    uplink_.push(arrival, sim::IssuedInput{arrival, op});
    return {};
  }
  if (const auto* ctl = std::get_if<Control>(&msg)) {
    switch (ctl->cmd) {
      case ControlCmd::Pause:
        paused_ = true;
        break;
      case ControlCmd::Resume:
        paused_ = false;
        break;
      case ControlCmd::Reset:
        end_episode_locked();
        start_episode_locked();
        break;
      case ControlCmd::SetP: {
        const double p = *ctl->value;
        try {
          const double d = sim::scenario_enlargement(sc_, p);
          const sim::SimConfig config = sim::make_config(sc_, d);
          probability_ = p;
          enlargement_ = d;
          config_ = config;
        } catch (const Error& e) {
          return {error_frame(WireError::Schema, e.what())};
        }
        end_episode_locked();
        start_episode_locked();
        break;
      }
    }
    return {};
  }
  if (const auto* m = std::get_if<Metrics>(&msg)) {
    if (m->values) return {error_frame(WireError::Schema, "metrics replies are server-to-client")};
    return {serialize(Metrics{metrics_locked()})};
  }
  return {error_frame(WireError::Schema,
                      std::string("\"") + std::string(type_name(msg)) + "\" is server-to-client")};
}

}  // namespace teleop::protocol
