#include "teleop/protocol.hpp"

#include <cmath>

namespace teleop::protocol {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void schema(const std::string& what) { throw ProtocolError(WireError::Schema, what); }

const Json& need(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) schema(std::string("missing field \"") + key + "\"");
  return *it;
}

double num(const Json& j, const std::string& what) {
  if (!j.is_number()) schema(what + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema(what + ": expected a finite number");
  return v;
}

std::int64_t integer(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) schema(what + ": expected an integer");
  return j.get<std::int64_t>();
}

std::uint64_t unsigned_integer(const Json& j, const std::string& what) {
  if (!j.is_number_unsigned()) schema(what + ": expected a non-negative integer");
  return j.get<std::uint64_t>();
}

bool boolean(const Json& j, const std::string& what) {
  if (!j.is_boolean()) schema(what + ": expected a boolean");
  return j.get<bool>();
}

std::string text(const Json& j, const std::string& what) {
  if (!j.is_string()) schema(what + ": expected a string");
  return j.get<std::string>();
}

template <std::size_t N>
std::array<double, N> numbers(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != N) schema(what + ": expected " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = num(j[i], what);
  return out;
}

Vec3 vec3(const Json& j, const std::string& what) {
  const auto a = numbers<3>(j, what);
  return {a[0], a[1], a[2]};
}

OrderedJson vec_json(const Vec3& v) { return OrderedJson::array({v.x(), v.y(), v.z()}); }

template <typename T, std::size_t N>
OrderedJson array_json(const std::array<T, N>& a) {
  OrderedJson out = OrderedJson::array();
  for (const auto& x : a) out.push_back(x);
  return out;
}

Hello parse_hello(const Json& j) {
  Hello h;
  h.proto = static_cast<int>(integer(need(j, "proto"), "proto"));
  if (h.proto != kProtocolVersion) schema("unsupported proto " + std::to_string(h.proto));
  h.client = text(need(j, "client"), "client");
  if (j.contains("session")) {
    if (!j["session"].is_object()) schema("session: expected an object");
    h.session = j["session"];
  }
  return h;
}

Input parse_input(const Json& j) {
  Input in;
  in.seq = integer(need(j, "seq"), "seq");
  in.lin = vec3(need(j, "lin"), "lin");
  in.ang = vec3(need(j, "ang"), "ang");
  in.grip = num(need(j, "grip"), "grip");
  in.trig = numbers<2>(need(j, "trig"), "trig");
  in.t_ms = integer(need(j, "t_ms"), "t_ms");
  return in;
}

State parse_state(const Json& j) {
  State s;
  s.tick = integer(need(j, "tick"), "tick");
  s.ack_seq = integer(need(j, "ack_seq"), "ack_seq");
  s.clamped = boolean(need(j, "clamped"), "clamped");
  const Json& pose = need(j, "pose");
  if (!pose.is_object()) schema("pose: expected an object");
  s.t = vec3(need(pose, "t"), "pose.t");
  s.q = numbers<4>(need(pose, "q"), "pose.q");
  s.overlap = numbers<2>(need(j, "overlap"), "overlap");
  s.stiff = numbers<2>(need(j, "stiff"), "stiff");
  const Json& fx = need(j, "trigger_fx");
  if (!fx.is_array() || fx.size() != 2) schema("trigger_fx: expected 2 strings");
  s.trigger_fx = {text(fx[0], "trigger_fx"), text(fx[1], "trigger_fx")};
  const Json& contact = need(j, "contact");
  if (!contact.is_array() || contact.size() != 2) schema("contact: expected 2 booleans");
  s.contact = {boolean(contact[0], "contact"), boolean(contact[1], "contact")};
  s.contacts_cum = integer(need(j, "contacts_cum"), "contacts_cum");
  s.dropped = unsigned_integer(need(j, "dropped"), "dropped");
  return s;
}

Control parse_control(const Json& j) {
  Control c;
  const std::string cmd = text(need(j, "cmd"), "cmd");
  if (cmd == "reset") {
    c.cmd = ControlCmd::Reset;
  } else if (cmd == "pause") {
    c.cmd = ControlCmd::Pause;
  } else if (cmd == "resume") {
    c.cmd = ControlCmd::Resume;
  } else if (cmd == "set_p") {
    c.cmd = ControlCmd::SetP;
  } else {
    schema("cmd: unknown control command \"" + cmd + "\"");
  }
  if (j.contains("value")) c.value = num(j["value"], "value");
  if (c.cmd == ControlCmd::SetP) {
    if (!c.value) schema("set_p requires a value");
    if (!(*c.value > 0.0 && *c.value < 1.0)) schema("value: probability out of range (need 0 < p < 1)");
  }
  return c;
}

Metrics parse_metrics(const Json& j) {
  Metrics m;
  const bool any = j.contains("episodes") || j.contains("contacts") || j.contains("duration_s");
  if (!any) return m;
  Metrics::Values v;
  v.episodes = unsigned_integer(need(j, "episodes"), "episodes");
  v.contacts = unsigned_integer(need(j, "contacts"), "contacts");
  v.duration_s = num(need(j, "duration_s"), "duration_s");
  m.values = v;
  return m;
}

ErrorMessage parse_error(const Json& j) {
  ErrorMessage e;
  const std::string code = text(need(j, "code"), "code");
  if (code == "busy") {
    e.code = WireError::Busy;
  } else if (code == "schema") {
    e.code = WireError::Schema;
  } else if (code == "seq") {
    e.code = WireError::Seq;
  } else {
    schema("code: unknown error code \"" + code + "\"");
  }
  e.detail = text(need(j, "detail"), "detail");
  return e;
}

struct ToJson {
  OrderedJson operator()(const Hello& h) const {
    OrderedJson j;
    j["type"] = "hello";
    j["proto"] = h.proto;
    j["client"] = h.client;
    if (h.session) j["session"] = *h.session;
    return j;
  }
  OrderedJson operator()(const Input& in) const {
    OrderedJson j;
    j["type"] = "input";
    j["seq"] = in.seq;
    j["lin"] = vec_json(in.lin);
    j["ang"] = vec_json(in.ang);
    j["grip"] = in.grip;
    j["trig"] = array_json(in.trig);
    j["t_ms"] = in.t_ms;
    return j;
  }
  OrderedJson operator()(const State& s) const {
    OrderedJson j;
    j["type"] = "state";
    j["tick"] = s.tick;
    j["ack_seq"] = s.ack_seq;
    j["clamped"] = s.clamped;
    j["pose"]["t"] = vec_json(s.t);
    j["pose"]["q"] = array_json(s.q);
    j["overlap"] = array_json(s.overlap);
    j["stiff"] = array_json(s.stiff);
    j["trigger_fx"] = array_json(s.trigger_fx);
    j["contact"] = array_json(s.contact);
    j["contacts_cum"] = s.contacts_cum;
    j["dropped"] = s.dropped;
    return j;
  }
  OrderedJson operator()(const Control& c) const {
    OrderedJson j;
    j["type"] = "control";
    j["cmd"] = std::string(to_string(c.cmd));
    if (c.value) j["value"] = *c.value;
    return j;
  }
  OrderedJson operator()(const Metrics& m) const {
    OrderedJson j;
    j["type"] = "metrics";
    if (m.values) {
      j["episodes"] = m.values->episodes;
      j["contacts"] = m.values->contacts;
      j["duration_s"] = m.values->duration_s;
    }
    return j;
  }
  OrderedJson operator()(const ErrorMessage& e) const {
    OrderedJson j;
    j["type"] = "error";
    j["code"] = std::string(to_string(e.code));
    j["detail"] = e.detail;
    return j;
  }
};

}  // namespace

std::string_view to_string(WireError code) {
  switch (code) {
    case WireError::Busy: return "busy";
    case WireError::Schema: return "schema";
    case WireError::Seq: return "seq";
  }
  return "schema";
}

std::string_view to_string(ControlCmd cmd) {
  switch (cmd) {
    case ControlCmd::Reset: return "reset";
    case ControlCmd::Pause: return "pause";
    case ControlCmd::Resume: return "resume";
    case ControlCmd::SetP: return "set_p";
  }
  return "pause";
}

Message parse_message(std::string_view text_frame) {
  Json j;
  try {
    j = Json::parse(text_frame);
  } catch (const Json::parse_error& e) {
    schema(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) schema("expected a JSON object");
  const std::string type = text(need(j, "type"), "type");
  if (type == "hello") return parse_hello(j);
  if (type == "input") return parse_input(j);
  if (type == "state") return parse_state(j);
  if (type == "control") return parse_control(j);
  if (type == "metrics") return parse_metrics(j);
  if (type == "error") return parse_error(j);
  schema("unknown message type \"" + type + "\"");
}

OrderedJson to_json(const Message& message) { return std::visit(ToJson{}, message); }

std::string serialize(const Message& message) { return to_json(message).dump(); }

std::string_view type_name(const Message& message) {
  static constexpr std::array<std::string_view, 6> kNames{"hello", "input",   "state",
                                                          "control", "metrics", "error"};
  return kNames[message.index()];
}

}  // namespace teleop::protocol
