#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using teleop::cli::kExitDivergence;
using teleop::cli::kExitInputError;
using teleop::cli::kExitOk;
using Json = nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result teleop_cmd(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = teleop::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

const std::string kData = TELEOP_DATA_DIR;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("teleop_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  static std::string read(const std::string& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, EnlargeReportsBudget) {
  const auto r = teleop_cmd({"enlarge", kData + "/sensor_spec.json"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = Json::parse(r.out);
  EXPECT_NEAR(j["budget"]["enlargement_distance"].get<double>(), 0.021632, 1e-6);
  EXPECT_NEAR(j["budget"]["end_effector"]["sigma"].get<double>(), 0.003, 1e-15);
  EXPECT_EQ(j["manifest"]["subcommand"], "enlarge");
  EXPECT_EQ(j["manifest"]["format_version"], 1);
}

TEST_F(Cli, EnlargeDegenerateSpec) {
  const auto spec = write("spec.json", R"({"camera":{"mean":0,"sigma":0},"delay_s":0.2,"max_speed_mps":0.1,"probability":0.9})");
  const auto r = teleop_cmd({"enlarge", spec});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NEAR(Json::parse(r.out)["budget"]["enlargement_distance"].get<double>(), 0.02, 1e-17);
}

TEST_F(Cli, EnlargeRejectsProbabilityOne) {
  const auto r = teleop_cmd({"enlarge", kData + "/sensor_spec.json", "--p", "1.0"});
  EXPECT_EQ(r.code, kExitInputError);
  EXPECT_NE(r.err.find("probability out of range"), std::string::npos) << r.err;
}

TEST_F(Cli, SchemaErrorsExitTwoWithFieldPath) {
  const auto spec = write("bad.json", R"({"camera":{"mean":0},"delay_s":0.1,"max_speed_mps":0.1,"probability":0.9})");
  auto r = teleop_cmd({"enlarge", spec});
  EXPECT_EQ(r.code, kExitInputError);
  EXPECT_NE(r.err.find("$.camera.sigma"), std::string::npos) << r.err;
  r = teleop_cmd({"enlarge", write("syntax.json", "{\n  \"camera\": ,\n}")});
  EXPECT_EQ(r.code, kExitInputError);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_EQ(teleop_cmd({"enlarge", path("missing.json")}).code, kExitInputError);
  EXPECT_EQ(teleop_cmd({"frobnicate"}).code, kExitInputError);
  EXPECT_EQ(teleop_cmd({}).code, kExitInputError);
}

TEST_F(Cli, OverlapRows) {
  const auto r = teleop_cmd({"overlap", kData + "/scene.json", "--oracle", "1000000", "--seed", "4"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto j = Json::parse(r.out);
  const auto& rows = j["pairs"];
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_NEAR(rows[0]["volume"].get<double>(), 4.0 * std::numbers::pi / 3.0, 1e-12);
  EXPECT_EQ(rows[4]["volume"].get<double>(), 0.0);
  for (const auto& row : rows) EXPECT_LE(std::abs(row["z"].get<double>()), 5.0);
  EXPECT_EQ(teleop_cmd({"overlap", kData + "/scene.json", "--format", "table"}).code, kExitOk);
}

TEST_F(Cli, TrialsRejectsZeroEpisodes) {
  const auto r = teleop_cmd({"trials", kData + "/harness_scenario.json", "--n", "0"});
  EXPECT_EQ(r.code, kExitInputError);
}

TEST_F(Cli, TrialsSameSeedSameBytes) {
  const std::vector<std::string> args{"--seed", "42", "trials", kData + "/harness_scenario.json", "--n", "300"};
  const auto a = teleop_cmd(args);
  const auto b = teleop_cmd(args);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto j = Json::parse(a.out);
  EXPECT_EQ(j["summary"]["n"], 300);
  EXPECT_EQ(j["manifest"]["seed"], 42);
  auto threaded = args;
  threaded.insert(threaded.end(), {"--threads", "3"});
  EXPECT_EQ(teleop_cmd(threaded).out, a.out);
}

TEST_F(Cli, TraceReplayExitCodes) {
  const auto trace = path("trace.jsonl");
  const auto r = teleop_cmd({"--seed", "5", "trials", kData + "/harness_scenario.json", "--n", "3", "--trace",
                             trace, "--trace-episode", "1"});
  ASSERT_EQ(r.code, kExitOk) << r.err;

  auto rep = teleop_cmd({"replay", trace});
  EXPECT_EQ(rep.code, kExitOk) << rep.err;
  EXPECT_EQ(rep.out.rfind("identical (", 0), 0u) << rep.out;

  const std::string text = read(trace);
  std::vector<std::string> lines;
  {
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  std::size_t target = 0;
  for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
    if (lines[i].find("\"overlap_l\":0.0,") == std::string::npos) {
      target = i;
      break;
    }
  }
  ASSERT_GT(target, 0u);
  auto rec = nlohmann::ordered_json::parse(lines[target]);
  const auto tick = rec["tick"].get<std::int64_t>();
  rec["overlap_l"] = 0.0;
  std::string flipped;
  for (std::size_t i = 0; i < lines.size(); ++i) flipped += (i == target ? rec.dump() : lines[i]) + "\n";
  rep = teleop_cmd({"replay", write("flipped.jsonl", flipped)});
  EXPECT_EQ(rep.code, kExitDivergence);
  EXPECT_EQ(rep.out, "divergent at tick " + std::to_string(tick) + ": field 'overlap_l' differs\n");

  rep = teleop_cmd({"replay", write("truncated.jsonl", text.substr(0, text.size() / 2))});
  EXPECT_EQ(rep.code, kExitInputError);
  EXPECT_EQ(teleop_cmd({"replay", path("nope.jsonl")}).code, kExitInputError);
}

TEST_F(Cli, OutFlagWritesFile) {
  const auto out = path("budget.json");
  const auto r = teleop_cmd({"--out", out, "enlarge", kData + "/sensor_spec.json"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  const auto j = Json::parse(read(out));
  EXPECT_EQ(j["manifest"]["output"], out);
}

TEST_F(Cli, TableFormat) {
  const auto r = teleop_cmd({"--format", "table", "enlarge", kData + "/sensor_spec.json"});
  ASSERT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("enlargement_m"), std::string::npos);
  EXPECT_EQ(teleop_cmd({"--format", "xml", "enlarge", kData + "/sensor_spec.json"}).code, kExitInputError);
}

TEST_F(Cli, ServerRejectsBadScenario) {
  std::ostringstream out, err;
  const auto bad = write("bad_scenario.json", "{}");
  EXPECT_EQ(teleop::cli::run_server({"run", "--scenario", bad, "--port", "0"}, out, err), kExitInputError);
  EXPECT_NE(err.str().find("error [Schema]"), std::string::npos) << err.str();
}
