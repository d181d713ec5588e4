#include "teleop/trace.hpp"

#include <sstream>

#include "teleop/errors.hpp"
#include "teleop/random.hpp"

namespace teleop::sim {

namespace {

using scenario::Json;

[[noreturn]] void malformed(std::uint64_t line, const std::string& what) {
  throw Error(ErrorCode::Schema, "trace line " + std::to_string(line) + ": " + what);
}

OrderedJson vec_json(const Vec3& v) { return OrderedJson::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const Json& j, const char* key) {
  const Json& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw Error(ErrorCode::Schema, std::string(key) + ": expected 3 numbers");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

}  // namespace

OrderedJson manifest_to_json(const RunManifest& m) {
  OrderedJson body;
  body["format_version"] = m.format_version;
  body["subcommand"] = m.subcommand;
  body["inputs"] = m.inputs;
  body["seed"] = m.seed;
  body["output"] = m.output;
  body["episode"] = m.episode;
  body["policy"] = m.policy;
  body["probability"] = m.probability;
  body["enlargement"] = m.enlargement;
  body["inject_errors"] = m.inject_errors;
  if (m.start_translation) body["start_translation"] = vec_json(*m.start_translation);
  body["scenario"] = m.scenario;
  OrderedJson out;
  out["manifest"] = std::move(body);
  return out;
}

RunManifest manifest_from_json(const Json& j) {
  try {
    const Json& b = j.at("manifest");
    RunManifest m;
    m.format_version = b.at("format_version").get<int>();
    if (m.format_version != kTraceFormatVersion) {
      throw Error(ErrorCode::Schema, "unsupported format_version " + std::to_string(m.format_version));
    }
    m.subcommand = b.at("subcommand").get<std::string>();
    m.inputs = b.at("inputs").get<std::vector<std::string>>();
    m.seed = b.at("seed").get<std::uint64_t>();
    m.output = b.at("output").get<std::string>();
    m.episode = b.at("episode").get<std::uint64_t>();
    m.policy = b.at("policy").get<std::string>();
    m.probability = b.at("probability").get<double>();
    m.enlargement = b.at("enlargement").get<double>();
    m.inject_errors = b.at("inject_errors").get<bool>();
    if (b.contains("start_translation")) m.start_translation = vec_from(b, "start_translation");
    m.scenario = b.at("scenario");
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("manifest: ") + e.what());
  }
}

OrderedJson input_to_json(const IssuedInput& in) {
  OrderedJson j;
  j["issued_tick"] = in.issued_tick;
  j["seq"] = in.input.seq;
  j["lin"] = vec_json(in.input.lin);
  j["ang"] = vec_json(in.input.ang);
  j["grip"] = in.input.grip;
  j["trig"] = OrderedJson::array({in.input.trig[0], in.input.trig[1]});
  j["t_ms"] = in.input.t_ms;
  j["clamped"] = in.input.clamped;
  return j;
}

IssuedInput input_from_json(const Json& j) {
  try {
    IssuedInput in;
    in.issued_tick = j.at("issued_tick").get<std::int64_t>();
    in.input.seq = j.at("seq").get<std::int64_t>();
    in.input.lin = vec_from(j, "lin");
    in.input.ang = vec_from(j, "ang");
    in.input.grip = j.at("grip").get<double>();
    const Json& trig = j.at("trig");
    if (!trig.is_array() || trig.size() != 2) throw Error(ErrorCode::Schema, "trig: expected 2 numbers");
    in.input.trig = {trig[0].get<double>(), trig[1].get<double>()};
    in.input.t_ms = j.at("t_ms").get<std::int64_t>();
    in.input.clamped = j.at("clamped").get<bool>();
    return in;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("input: ") + e.what());
  }
}

OrderedJson record_to_json(const SimTickRecord& rec) {
  const Quat q = rec.pose.quaternion();
  OrderedJson pose;
  pose["t"] = vec_json(rec.pose.translation);
  pose["q"] = OrderedJson::array({q.w(), q.x(), q.y(), q.z()});
  OrderedJson j;
  j["tick"] = rec.tick;
  j["input"] = input_to_json(rec.input);
  j["pose"] = std::move(pose);
  j["overlap_l"] = rec.overlap[kLeft];
  j["overlap_r"] = rec.overlap[kRight];
  j["stiff_l"] = rec.stiffness[kLeft];
  j["stiff_r"] = rec.stiffness[kRight];
  j["contact_l"] = rec.contact[kLeft];
  j["contact_r"] = rec.contact[kRight];
  j["contacts_cum"] = rec.contacts_cum;
  return j;
}

std::string record_line(const SimTickRecord& rec) { return record_to_json(rec).dump(); }

void TraceWriter::begin(const RunManifest& manifest) {
  if (open_) end();
  *out_ << manifest_to_json(manifest).dump() << '\n';
  records_ = 0;
  open_ = true;
}

void TraceWriter::write(const SimTickRecord& rec) {
  if (!open_) throw Error(ErrorCode::InvalidArgument, "trace record written before a manifest");
  *out_ << record_line(rec) << '\n';
  ++records_;
}

void TraceWriter::end() {
  if (!open_) return;
  OrderedJson j;
  j["end"]["records"] = records_;
  *out_ << j.dump() << '\n';
  out_->flush();
  open_ = false;
}

WorldState episode_state(const scenario::Scenario& sc, const Vec3& start_translation,
                         std::uint64_t seed, std::uint64_t episode, bool inject_errors) {
  WorldState s = initial_state(sc);
  s.ee_pose.translation = start_translation;
  if (inject_errors) {
    s = inject_estimation_error(s, sc.error_spec.camera, scenario::end_effector_error(sc.error_spec),
                                derive_key(seed, episode));
  }
  return s;
}

WorldState segment_initial_state(const scenario::Scenario& sc, const RunManifest& manifest) {
  return episode_state(sc, manifest.start_translation.value_or(sc.initial_pose.translation),
                       manifest.seed, manifest.episode, manifest.inject_errors);
}

namespace {

struct Segment {
  scenario::Scenario sc;
  SimConfig config;
  WorldState state;
  InputQueue uplink;
  std::uint64_t records = 0;
};

std::string first_difference(const Json& recorded, const Json& recomputed) {
  for (auto it = recomputed.begin(); it != recomputed.end(); ++it) {
    if (!recorded.contains(it.key()) || recorded[it.key()] != it.value()) return it.key();
  }
  return "formatting";
}

}  // namespace

ReplayResult replay(std::istream& trace) {
  ReplayResult result;
  std::optional<Segment> seg;
  std::string line;
  std::uint64_t lineno = 0;
  bool saw_manifest = false;

  while (std::getline(trace, line)) {
    ++lineno;
    if (trace.eof()) malformed(lineno, "truncated (missing final newline)");
    if (line.empty()) malformed(lineno, "empty line");
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      malformed(lineno, e.what());
    }
    if (!j.is_object()) malformed(lineno, "expected an object");

    if (j.contains("manifest")) {
      if (seg) malformed(lineno, "manifest before the previous segment's end marker");
      try {
        const RunManifest m = manifest_from_json(j);
        Segment s{scenario::parse_scenario(m.scenario), {}, {}, InputQueue(0), 0};
        s.config = make_config(s.sc, m.enlargement);
        s.state = segment_initial_state(s.sc, m);
        s.uplink = InputQueue(s.sc.uplink_delay_ticks);
        seg = std::move(s);
      } catch (const Error& e) {
        malformed(lineno, e.what());
      }
      saw_manifest = true;
      continue;
    }
    if (!seg) malformed(lineno, saw_manifest ? "record after end marker" : "missing manifest");

    if (j.contains("end")) {
      const Json& e = j["end"];
      if (!e.is_object() || !e.contains("records") || !e["records"].is_number_unsigned() ||
          e["records"].get<std::uint64_t>() != seg->records) {
        malformed(lineno, "end marker record count does not match");
      }
      seg.reset();
      continue;
    }

    if (!j.contains("tick") || !j["tick"].is_number_integer() || !j.contains("input")) {
      malformed(lineno, "expected a tick record");
    }
    const std::int64_t tick = j["tick"].get<std::int64_t>();
    IssuedInput applied;
    try {
      applied = input_from_json(j["input"]);
    } catch (const Error& e) {
      malformed(lineno, e.what());
    }
    ++seg->records;
    ++result.records;
    if (!result.identical) continue;

    const std::int64_t expected_tick = seg->state.tick + 1;
    if (tick != expected_tick) {
      result.identical = false;
      result.divergent_tick = expected_tick;
      result.detail = "tick sequence gap: expected " + std::to_string(expected_tick) + ", found " +
                      std::to_string(tick);
      continue;
    }
    if (applied.issued_tick < 0) {
      if (seg->state.held.issued_tick >= 0) {
        seg->state.held = IssuedInput{};
        seg->uplink.clear();
      }
    } else if (applied.issued_tick != seg->state.held.issued_tick) {
      if (applied.issued_tick + seg->uplink.delay() != tick) {
        result.identical = false;
        result.divergent_tick = tick;
        result.detail = "input issued at tick " + std::to_string(applied.issued_tick) +
                        " applied with the wrong uplink delay";
        continue;
      }
      seg->uplink.push(applied.issued_tick, applied);
    }

    auto [next, rec] = step(seg->state, seg->uplink, seg->config);
    seg->state = std::move(next);
    const std::string recomputed = record_line(rec);
    if (recomputed != line) {
      result.identical = false;
      result.divergent_tick = tick;
      result.detail = "field '" + first_difference(j, Json::parse(recomputed)) + "' differs";
    }
  }
  if (!saw_manifest) malformed(lineno + 1, "empty trace");
  if (seg) malformed(lineno + 1, "truncated (missing end marker)");
  return result;
}

}  // namespace teleop::sim
