#include <gtest/gtest.h>

#include <sstream>

#include "teleop/errors.hpp"
#include "teleop/scenario.hpp"
#include "teleop/trace.hpp"
#include "teleop/trials.hpp"

using namespace teleop;
using namespace teleop::sim;

namespace {

std::string episode_trace(std::uint64_t seed, std::uint64_t episode, int segments = 1) {
  const auto doc = scenario::read_json_file(TELEOP_DATA_DIR "/harness_scenario.json");
  const auto sc = scenario::parse_scenario(doc);
  std::ostringstream out;
  TraceWriter writer(out);
  for (int s = 0; s < segments; ++s) {
    RunManifest m;
    m.subcommand = "trials";
    m.inputs = {"harness_scenario.json"};
    m.seed = seed;
    m.output = "trace.jsonl";
    m.episode = episode + static_cast<std::uint64_t>(s);
    m.policy = "stop_on_overlap";
    m.probability = 0.99;
    m.enlargement = scenario_enlargement(sc, 0.99);
    m.start_translation = episode_start(sc, seed, m.episode);
    m.scenario = doc;
    writer.begin(m);
    const EpisodeSpec spec{Policy::StopOnOverlap, nullptr, m.enlargement, true, seed, m.episode};
    run_episode(sc, spec, [&](const SimTickRecord& r) { writer.write(r); });
    writer.end();
  }
  return out.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string join(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

ErrorCode replay_error(const std::string& text) {
  std::istringstream in(text);
  try {
    replay(in);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "replay accepted a malformed trace";
  return ErrorCode::Io;
}

}  // namespace

TEST(Trace, SameInputsGiveIdenticalBytes) {
  EXPECT_EQ(episode_trace(5, 2), episode_trace(5, 2));
  EXPECT_NE(episode_trace(5, 2), episode_trace(6, 2));
}

TEST(Trace, Layout) {
  const auto lines = lines_of(episode_trace(1, 0));
  ASSERT_GT(lines.size(), 3u);
  EXPECT_EQ(lines.front().rfind("{\"manifest\":{\"format_version\":1,\"subcommand\":\"trials\"", 0), 0u);
  EXPECT_EQ(lines[1].rfind("{\"tick\":0,\"input\":{\"issued_tick\":-1,", 0), 0u);
  EXPECT_NE(lines[1].find("\"pose\":{\"t\":["), std::string::npos);
  const auto rec = nlohmann::ordered_json::parse(lines[1]);
  std::vector<std::string> keys;
  for (auto it = rec.begin(); it != rec.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"tick", "input", "pose", "overlap_l", "overlap_r", "stiff_l",
                                            "stiff_r", "contact_l", "contact_r", "contacts_cum"}));
  EXPECT_EQ(lines.back(), "{\"end\":{\"records\":" + std::to_string(lines.size() - 2) + "}}");
}

TEST(Trace, ReplayIdentical) {
  const std::string text = episode_trace(3, 4, 3);
  std::istringstream in(text);
  const auto r = replay(in);
  EXPECT_TRUE(r.identical) << r.detail;
  EXPECT_EQ(r.records, lines_of(text).size() - 6);
}

TEST(Trace, ReplayFindsFlippedValue) {
  auto lines = lines_of(episode_trace(3, 0));
  std::size_t target = 0;
  for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
    if (lines[i].find("\"overlap_l\":0.0,") == std::string::npos) {
      target = i;
      break;
    }
  }
  ASSERT_GT(target, 0u);
  auto j = scenario::Json::parse(lines[target]);
  const auto tick = j["tick"].get<std::int64_t>();
  nlohmann::ordered_json o = nlohmann::ordered_json::parse(lines[target]);
  o["overlap_l"] = o["overlap_l"].get<double>() * 1.5;
  lines[target] = o.dump();
  std::istringstream in(join(lines));
  const auto r = replay(in);
  EXPECT_FALSE(r.identical);
  ASSERT_TRUE(r.divergent_tick.has_value());
  EXPECT_EQ(*r.divergent_tick, tick);
  EXPECT_NE(r.detail.find("overlap_l"), std::string::npos);
}

TEST(Trace, ReplayDetectsWrongLag) {
  auto lines = lines_of(episode_trace(3, 0));
  nlohmann::ordered_json o = nlohmann::ordered_json::parse(lines[20]);
  ASSERT_EQ(o["tick"], 19);
  o["input"]["issued_tick"] = 17;
  lines[20] = o.dump();
  std::istringstream in(join(lines));
  const auto r = replay(in);
  EXPECT_FALSE(r.identical);
  EXPECT_EQ(r.divergent_tick, 19);
  EXPECT_NE(r.detail.find("uplink delay"), std::string::npos);
}

TEST(Trace, MalformedTraces) {
  const std::string text = episode_trace(3, 0);
  EXPECT_EQ(replay_error(text.substr(0, text.size() - 1)), ErrorCode::Schema);
  auto lines = lines_of(text);
  lines.pop_back();
  EXPECT_EQ(replay_error(join(lines)), ErrorCode::Schema);
  EXPECT_EQ(replay_error(""), ErrorCode::Schema);
  EXPECT_EQ(replay_error(join({lines[1]})), ErrorCode::Schema);
  lines = lines_of(text);
  lines.back() = "{\"end\":{\"records\":3}}";
  EXPECT_EQ(replay_error(join(lines)), ErrorCode::Schema);
  lines = lines_of(text);
  lines[5] = "{\"tick\":";
  EXPECT_EQ(replay_error(join(lines)), ErrorCode::Schema);
}

TEST(Trace, ManifestAndInputRoundTrip) {
  RunManifest m;
  m.subcommand = "serve";
  m.inputs = {"a.json", "b.json"};
  m.seed = 18446744073709551615ULL;
  m.episode = 3;
  m.policy = "live";
  m.probability = 0.9;
  m.enlargement = 0.0123;
  m.inject_errors = false;
  m.start_translation = Vec3(0.1, 0.2, 0.3);
  m.scenario = {{"x", 1}};
  const auto dumped = manifest_to_json(m).dump();
  const auto back = manifest_from_json(scenario::Json::parse(dumped));
  EXPECT_EQ(manifest_to_json(back).dump(), dumped);

  IssuedInput in;
  in.issued_tick = 12;
  in.input.seq = 9;
  in.input.lin = {0.1, -0.2, 0.3};
  in.input.trig = {0.25, 1.0};
  in.input.clamped = true;
  const auto ij = input_to_json(in).dump();
  EXPECT_EQ(input_from_json(scenario::Json::parse(ij)), in);
  EXPECT_EQ(ij.rfind("{\"issued_tick\":12,\"seq\":9,\"lin\":", 0), 0u);
}
