#include <gtest/gtest.h>

#include <sstream>

#include "teleop/errors.hpp"
#include "teleop/scenario.hpp"
#include "teleop/trials.hpp"

using namespace teleop;
using namespace teleop::sim;

namespace {

scenario::Json harness_json() { return scenario::read_json_file(TELEOP_DATA_DIR "/harness_scenario.json"); }

scenario::Scenario harness() { return scenario::parse_scenario(harness_json()); }

/// Harness scenario with all estimation errors removed.
scenario::Scenario exact_harness(double delay_s) {
  auto j = harness_json();
  j["error_spec"]["camera"]["sigma"] = 0.0;
  j["error_spec"]["chain"] = scenario::Json::array();
  j["error_spec"]["delay_s"] = delay_s;
  return scenario::parse_scenario(j);
}

}  // namespace

TEST(Trials, ZeroEnlargementAlwaysHitsHeadOn) {
  const auto sc = exact_harness(0.0);
  TrialOptions o;
  o.n = 200;
  o.seed = 3;
  o.probability = 0.5;
  const auto s = run_trials(sc, o);
  EXPECT_EQ(s.enlargement, 0.0);
  EXPECT_EQ(s.contacts, 200u);
  EXPECT_EQ(s.contact_rate, 1.0);
}

TEST(Trials, ExactWorldWithMarginNeverHits) {
  const auto sc = exact_harness(0.0);
  // Stopping distance is v * (k1 + 1) * dt = 6 mm.
  for (std::uint64_t i = 0; i < 200; ++i) {
    const EpisodeSpec spec{Policy::StopOnOverlap, nullptr, 0.0065, true, 11, i};
    const auto r = run_episode(sc, spec);
    EXPECT_FALSE(r.contact) << i;
    EXPECT_TRUE(r.stopped);
    EXPECT_GT(r.min_clearance, 0.0);
    EXPECT_LT(r.min_clearance, 0.0065);
  }
}

TEST(Trials, DelayTermCoversReactionDistance) {
  const auto sc = exact_harness(0.06);
  TrialOptions o;
  o.n = 300;
  o.seed = 5;
  const auto s = run_trials(sc, o);
  EXPECT_NEAR(s.enlargement, 0.006, 1e-15);
  EXPECT_EQ(s.contacts, 0u);
}

TEST(Trials, HigherProbabilityMeansFewerContacts) {
  const auto sc = harness();
  TrialOptions o;
  o.n = 2000;
  o.seed = 1;
  o.probability = 0.99;
  const auto high = run_trials(sc, o);
  o.probability = 0.5;
  const auto low = run_trials(sc, o);
  EXPECT_LE(high.contact_rate, 0.015);
  EXPECT_GT(low.contact_rate, high.contact_rate);
  EXPECT_GT(high.enlargement, low.enlargement);
}

TEST(Trials, SummaryIndependentOfThreadCount) {
  const auto sc = harness();
  TrialOptions o;
  o.n = 257;
  o.seed = 77;
  o.probability = 0.8;
  o.threads = 1;
  const auto one = summary_to_json(run_trials(sc, o)).dump();
  o.threads = 4;
  EXPECT_EQ(one, summary_to_json(run_trials(sc, o)).dump());
  o.threads = 300;
  EXPECT_EQ(one, summary_to_json(run_trials(sc, o)).dump());
}

TEST(Trials, Preconditions) {
  const auto sc = harness();
  TrialOptions o;
  o.n = 0;
  EXPECT_THROW(run_trials(sc, o), Error);
  o.n = 1;
  o.policy = Policy::OperatorTrace;
  EXPECT_THROW(run_trials(sc, o), Error);
  EXPECT_THROW(policy_from_string("wander"), Error);
  EXPECT_EQ(policy_from_string(to_string(Policy::OperatorTrace)), Policy::OperatorTrace);
}

TEST(Trials, StartJitterStaysOnApproachLine) {
  const auto sc = harness();
  for (std::uint64_t i = 0; i < 500; ++i) {
    const Vec3 s = episode_start(sc, 9, i);
    EXPECT_LE(std::abs(s.x()), 0.005);
    EXPECT_EQ(s.y(), 0.0);
    EXPECT_EQ(s.z(), 0.0);
  }
  EXPECT_NE(episode_start(sc, 9, 0), episode_start(sc, 9, 1));
  EXPECT_EQ(episode_start(sc, 9, 4), episode_start(sc, 9, 4));
}

TEST(InputTraceTest, ParseAndHold) {
  std::istringstream in(R"({"tick":0,"seq":1,"lin":[0.05,0,0]}
{"tick":10,"seq":2,"lin":[0,0,0],"grip":0.5}

{"tick":20,"seq":5,"trig":[0,1],"t_ms":200}
)");
  const auto trace = parse_input_trace(in);
  ASSERT_EQ(trace.commands.size(), 3u);
  EXPECT_EQ(trace.at(-1).seq, 0);
  EXPECT_EQ(trace.at(5).seq, 1);
  EXPECT_EQ(trace.at(10).grip, 0.5);
  EXPECT_EQ(trace.at(100).trig[1], 1.0);
  EXPECT_EQ(trace.last_tick(), 20);
}

TEST(InputTraceTest, RejectsDisorder) {
  for (const char* text : {"{\"tick\":3,\"seq\":1}\n{\"tick\":3,\"seq\":2}\n",
                           "{\"tick\":3,\"seq\":2}\n{\"tick\":4,\"seq\":2}\n", "{\"seq\":2}\n",
                           "{\"tick\":1,\"seq\":1,\"lin\":[1,2]}\n", "not json\n"}) {
    std::istringstream in(text);
    try {
      parse_input_trace(in);
      FAIL() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Schema);
    }
  }
}

TEST(Trials, OperatorTracePolicyRunsPastLastCommand) {
  const auto sc = harness();
  std::istringstream in("{\"tick\":0,\"seq\":1,\"lin\":[0.05,0,0]}\n{\"tick\":30,\"seq\":2}\n");
  const auto trace = parse_input_trace(in);
  std::vector<SimTickRecord> recs;
  const EpisodeSpec spec{Policy::OperatorTrace, &trace, 0.01, false, 0, 0};
  const auto r = run_episode(sc, spec, [&](const SimTickRecord& rec) { recs.push_back(rec); });
  EXPECT_EQ(r.ticks, 30 + sc.uplink_delay_ticks + 1);
  EXPECT_EQ(recs.back().input.input.seq, 2);
  EXPECT_NEAR(recs.back().pose.translation.x() - episode_start(sc, 0, 0).x(), 30 * 0.05 * 0.01, 1e-12);
}
