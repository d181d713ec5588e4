#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "teleop/protocol.hpp"

using namespace teleop;
using namespace teleop::protocol;

namespace {

std::vector<std::string> corpus() {
  std::ifstream in(TELEOP_TEST_DATA_DIR "/messages.jsonl");
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

WireError wire_error(const std::string& frame) {
  try {
    parse_message(frame);
  } catch (const ProtocolError& e) {
    return e.wire();
  }
  ADD_FAILURE() << "accepted: " << frame;
  return WireError::Busy;
}

}  // namespace

TEST(Protocol, GoldenCorpusRoundTrips) {
  const auto lines = corpus();
  ASSERT_EQ(lines.size(), 15u);
  std::set<std::string> types;
  for (const auto& line : lines) {
    const Message m = parse_message(line);
    EXPECT_EQ(serialize(m), line);
    EXPECT_EQ(serialize(parse_message(serialize(m))), line);
    types.insert(std::string(type_name(m)));
  }
  EXPECT_EQ(types.size(), 6u);
}

TEST(Protocol, ParsedValues) {
  const auto in = std::get<Input>(parse_message(
      R"({"type":"input","seq":42,"lin":[0.05,-0.01,0.002],"ang":[0,0,0.3],"grip":0.75,"trig":[0,1],"t_ms":700})"));
  EXPECT_EQ(in.seq, 42);
  EXPECT_EQ(in.lin, Vec3(0.05, -0.01, 0.002));
  EXPECT_EQ(in.trig[1], 1.0);
  EXPECT_EQ(in.t_ms, 700);
  const auto c = std::get<Control>(parse_message(R"({"type":"control","cmd":"set_p","value":0.95})"));
  EXPECT_EQ(c.cmd, ControlCmd::SetP);
  EXPECT_EQ(c.value, 0.95);
  EXPECT_FALSE(std::get<Metrics>(parse_message(R"({"type":"metrics"})")).values.has_value());
}

TEST(Protocol, KeyOrderIsDocumented) {
  State s;
  s.trigger_fx = {"0100000000000000000000", "0100000000000000000000"};
  EXPECT_EQ(serialize(s).substr(0, 60), R"({"type":"state","tick":0,"ack_seq":0,"clamped":false,"pose":)");
  const std::string in = serialize(Input{});
  EXPECT_EQ(in, R"({"type":"input","seq":0,"lin":[0.0,0.0,0.0],"ang":[0.0,0.0,0.0],"grip":0.0,"trig":[0.0,0.0],"t_ms":0})");
}

TEST(Protocol, MalformedMessagesGiveSchema) {
  for (const std::string frame : {
           R"(not json)",
           R"([1,2,3])",
           R"({"seq":1})",
           R"({"type":"teleport"})",
           R"({"type":7})",
           R"({"type":"hello","proto":2,"client":"x"})",
           R"({"type":"hello","client":"x"})",
           R"({"type":"input","seq":1,"lin":[0,0],"ang":[0,0,0],"grip":0,"trig":[0,0],"t_ms":0})",
           R"({"type":"input","seq":1.5,"lin":[0,0,0],"ang":[0,0,0],"grip":0,"trig":[0,0],"t_ms":0})",
           R"({"type":"input","seq":1,"lin":[0,0,"a"],"ang":[0,0,0],"grip":0,"trig":[0,0],"t_ms":0})",
           R"({"type":"input","lin":[0,0,0],"ang":[0,0,0],"grip":0,"trig":[0,0],"t_ms":0})",
           R"({"type":"input","seq":1,"lin":[0,0,0],"ang":[0,0,0],"grip":0,"trig":[0],"t_ms":0})",
           R"({"type":"control","cmd":"explode"})",
           R"({"type":"control","cmd":"set_p"})",
           R"({"type":"control","cmd":"set_p","value":1.0})",
           R"({"type":"control","cmd":"set_p","value":0})",
           R"({"type":"metrics","episodes":1})",
           R"({"type":"error","code":"oops","detail":"x"})",
           R"({"type":"state","tick":0})",
       }) {
    EXPECT_EQ(wire_error(frame), WireError::Schema) << frame;
  }
}

TEST(Protocol, ErrorCodeNames) {
  EXPECT_EQ(to_string(WireError::Busy), "busy");
  EXPECT_EQ(to_string(WireError::Schema), "schema");
  EXPECT_EQ(to_string(WireError::Seq), "seq");
}
