#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "gphpa/cli.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kToy = std::string(GPHPA_DATA_DIR) + "/configs/toy.json";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "phpa");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = gphpa::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gphpa_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, FullPipelineWritesDeclaredOutputs) {
  const std::string out = path("run");
  ASSERT_EQ(run_cli({"train-workload", "--config", kToy, "--out", out}).code, 0);
  for (const char* s : {"productpage", "details", "reviews", "ratings"}) {
    EXPECT_TRUE(fs::exists(out + "/models/lstm_" + std::string(s) + ".json")) << s;
  }
  EXPECT_TRUE(fs::exists(out + "/workload_metrics.json"));
  ASSERT_EQ(run_cli({"train-resource", "--config", kToy, "--out", out}).code, 0);
  const auto metrics = nlohmann::json::parse(gphpa::cli::read_text(out + "/resource_metrics.json"));
  EXPECT_EQ(metrics["per_node_mse"].size(), 4u);
  EXPECT_TRUE(std::isfinite(metrics["mse"]["test"].get<double>()));

  ASSERT_EQ(run_cli({"simulate", "--config", kToy, "--out", out, "--policy", "reactive"}).code, 0);
  ASSERT_EQ(run_cli({"simulate", "--config", kToy, "--out", out, "--policy", "graph-phpa"}).code, 0);
  for (const char* r : {"reactive-0.90", "reactive-0.70", "graph-phpa"}) {
    const std::string csv = gphpa::cli::read_text(out + "/" + r + "/simulation.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 200 * 4) << r;
  }
  EXPECT_TRUE(fs::exists(out + "/graph-phpa/decisions.csv"));

  const auto cmp = run_cli({"compare", out + "/reactive-0.70", out + "/reactive-0.90", out + "/graph-phpa", "--out",
                            out + "/compare"});
  ASSERT_EQ(cmp.code, 0) << cmp.err;
  EXPECT_NE(cmp.out.find("graph-phpa"), std::string::npos);
  for (const char* s : {"productpage", "details", "reviews", "ratings"}) {
    EXPECT_TRUE(fs::exists(out + "/compare/pods_" + std::string(s) + ".svg")) << s;
  }
  const auto j = nlohmann::json::parse(gphpa::cli::read_text(out + "/compare/comparison.json"));
  EXPECT_EQ(j["baseline"], "reactive-0.70");
  EXPECT_EQ(j["policies"][0]["savings_percent"].get<double>(), 0.0);
}

TEST_F(CliTest, SingleThresholdRun) {
  const auto r = run_cli({"simulate", "--config", kToy, "--out", path("r"), "--policy", "reactive", "--threshold", "0.8"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("r/reactive-0.80/summary.json")));
  EXPECT_FALSE(fs::exists(path("r/reactive-0.90")));
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"simulate", "--config", kToy, "--out", path("x"), "--policy", "magic"}).code, 2);
  EXPECT_EQ(run_cli({"simulate", "--config", kToy, "--out", path("x")}).code, 2);
  EXPECT_EQ(run_cli({"simulate", "--config", kToy, "--out", path("x"), "--policy", "reactive", "--threshold", "1.5"}).code, 2);
  EXPECT_EQ(run_cli({"train-workload", "--out", path("x")}).code, 2);
  EXPECT_EQ(run_cli({"compare", path("a")}).code, 2);
}

TEST_F(CliTest, MissingModelsAreActionable) {
  const auto r = run_cli({"train-resource", "--config", kToy, "--out", path("m")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("run train-workload first"), std::string::npos);
  const auto s = run_cli({"simulate", "--config", kToy, "--out", path("m"), "--policy", "graph-phpa"});
  EXPECT_EQ(s.code, 1);
  EXPECT_NE(s.err.find("not found"), std::string::npos);
}

TEST_F(CliTest, CompareRejectsMismatchedRuns) {
  ASSERT_EQ(run_cli({"simulate", "--config", kToy, "--out", path("a"), "--policy", "reactive", "--threshold", "0.9"}).code, 0);
  ASSERT_EQ(run_cli({"simulate", "--config", kToy, "--out", path("b"), "--policy", "reactive", "--threshold", "0.7",
                     "--seed", "8"}).code, 0);
  const auto r = run_cli({"compare", path("a/reactive-0.90"), path("b/reactive-0.70"), "--out", path("c")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("'seed'"), std::string::npos);
}

TEST_F(CliTest, GenTraceIsDeterministic) {
  ASSERT_EQ(run_cli({"gen-trace", "--pattern", "bursty", "--length", "300", "--seed", "5", "--out", path("t1")}).code, 0);
  ASSERT_EQ(run_cli({"gen-trace", "--pattern", "bursty", "--length", "300", "--seed", "5", "--out", path("t2")}).code, 0);
  const std::string a = gphpa::cli::read_text(path("t1/trace.csv"));
  EXPECT_EQ(a, gphpa::cli::read_text(path("t2/trace.csv")));
  EXPECT_EQ(gphpa::parse_trace_csv(a).size(), 300u);
  EXPECT_EQ(run_cli({"gen-trace", "--pattern", "square", "--out", path("t3")}).code, 1);
}

TEST(Log, ParseLevel) {
  using gphpa::log::Level;
  using gphpa::log::parse_level;
  EXPECT_EQ(parse_level(nullptr), Level::kInfo);
  EXPECT_EQ(parse_level("debug"), Level::kDebug);
  EXPECT_EQ(parse_level("0"), Level::kError);
  EXPECT_EQ(parse_level("warn"), Level::kWarn);
  EXPECT_EQ(parse_level("loud"), Level::kInfo);
}
