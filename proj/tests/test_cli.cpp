#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "polsynth/cli.hpp"
#include "polsynth/ppo.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = polsynth::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const std::string& name) { return std::string(POLSYNTH_FIXTURE_DIR) + "/" + name; }

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("polsynth-") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, ParseThenExplainRoundTrip) {
  auto r = run({"parse", "--domain", "highway", "--in", fixture("highway_overtake.dsl"), "--out",
                path("t.tree")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(path("t.tree")), slurp(fixture("highway_overtake.tree")));
  const auto manifest = json::parse(slurp(path("t.tree.manifest.json")));
  EXPECT_EQ(manifest["command"], "parse");
  EXPECT_TRUE(manifest.contains("started"));

  r = run({"explain", "--tree", path("t.tree"), "--style", "program"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(fixture("highway_overtake.dsl")));
}

TEST_F(CliTest, ParseReportsPosition) {
  write("bad.dsl", "if traffic_jam\n  wait\nelse:\n  wait\n");
  const auto r = run({"parse", "--domain", "taxi", "--in", path("bad.dsl"), "--out", path("x")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 1"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("x")));
}

TEST_F(CliTest, ValidateExitCodes) {
  auto r = run({"validate", "--in", fixture("taxi_jam.tree")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "ok\n");
  write("wrong.tree", R"({"decision":"traffic_jam","true":{"leaf":"faster"},"false":{"leaf":"wait"},"v":1})");
  r = run({"validate", "--domain", "taxi", "--in", path("wrong.tree")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("root/true"), std::string::npos) << r.out;
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"validate"}).code, 2);
  EXPECT_EQ(run({"validate", "--in", path("missing.tree")}).code, 2);
  EXPECT_EQ(run({"explain", "--tree", fixture("taxi_jam.tree"), "--style", "poem"}).code, 2);
  EXPECT_EQ(run({"--config-version", "2", "validate", "--in", fixture("taxi_jam.tree")}).code, 2);
}

TEST_F(CliTest, ConfigFile) {
  write("c.ini", "[explain]\ntree=" + fixture("taxi_jam.tree") + "\nstyle=program\n");
  const auto r = run({"--config", path("c.ini"), "explain"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "if traffic_jam:\n  drive_airport\nelse:\n  drive_city\n");
}

TEST_F(CliTest, GenCorpus) {
  const auto r = run({"gen-corpus", "--domain", "taxi", "--out", path("c.jsonl"), "--n-base", "10",
                      "--seed", "3", "--min-count", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(path("c.jsonl")), slurp(fixture("mini_corpus.jsonl")));
  EXPECT_TRUE(fs::exists(path("c.jsonl.vocab")));
  const auto manifest = json::parse(slurp(path("c.jsonl.manifest.json")));
  EXPECT_EQ(manifest["seed"], 3);
}

TEST_F(CliTest, InitDiscretizeRoundTrip) {
  auto r = run({"init-ddt", "--tree", fixture("taxi_village.tree"), "--out", path("p.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"discretize", "--domain", "taxi", "--params", path("p.json"), "--out", path("d.tree")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(path("d.tree")), slurp(fixture("taxi_village.tree")));
  EXPECT_EQ(r.out, slurp(std::string(POLSYNTH_GOLDEN_DIR) + "/taxi_village.tree.txt"));
}

TEST_F(CliTest, TrainAndReport) {
  auto r = run({"train", "--domain", "taxi", "--init-trees", fixture("taxi_jam.tree"), "--out",
                path("good"), "--seeds", "2", "--seed", "1", "--episodes", "120", "--rollout", "256",
                "--minibatch", "64", "--select-episodes", "10", "--label", "good"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"train", "--domain", "taxi", "--policy", "mlp", "--hidden", "8", "--out", path("mlp"),
           "--seeds", "2", "--seed", "1", "--episodes", "120", "--rollout", "256", "--label", "mlp"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto mlp_params = json::parse(slurp(path("mlp/run-1.params.json")));
  EXPECT_EQ(mlp_params["kind"], "mlp");
  std::ifstream log_in(path("good/run-2.log.jsonl"));
  const auto log = polsynth::read_training_log(log_in);
  EXPECT_EQ(log.episode_returns.size(), 120u);
  EXPECT_EQ(log.label, "good");

  r = run({"report", "--logs", path("good/run-1.log.jsonl"), path("good/run-2.log.jsonl"),
           path("mlp/run-1.log.jsonl"), path("mlp/run-2.log.jsonl"), "--window", "100", "--out",
           path("r.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = slurp(path("r.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "label,runs,median_initial,se_initial,median_max_rolling,se_max_rolling");
  EXPECT_NE(csv.find("\ngood,2,"), std::string::npos);
  EXPECT_NE(csv.find("\nmlp,2,"), std::string::npos);

  r = run({"train", "--domain", "taxi", "--policy", "mlp", "--params", path("p.json"), "--out",
           path("x")});
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, EvalTranslate) {
  auto r = run({"eval-translate", "--corpus", fixture("mini_corpus.jsonl"), "--predictions",
                fixture("mini_predictions_exact.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto summary = json::parse(r.out);
  EXPECT_EQ(summary["tree_accuracy"], 1.0);
  EXPECT_EQ(summary["token_accuracy"], 1.0);
  EXPECT_EQ(summary["examples"], 2);

  r = run({"eval-translate", "--corpus", fixture("mini_corpus.jsonl"), "--predictions",
           fixture("mini_predictions_mixed.jsonl"), "--split", "all", "--out", path("s.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  summary = json::parse(slurp(path("s.json")));
  EXPECT_EQ(summary["examples"], 20);
  EXPECT_EQ(summary["missing"], 1);
  EXPECT_EQ(summary["failed"], 1);
  EXPECT_NEAR(summary["tree_accuracy"].get<double>(), 17.0 / 20, 1e-12);
  EXPECT_NEAR(summary["token_accuracy"].get<double>(), (17 + 0.8) / 20, 1e-12);

  write("junk.jsonl", "not json\n");
  r = run({"eval-translate", "--corpus", fixture("mini_corpus.jsonl"), "--predictions",
           path("junk.jsonl")});
  EXPECT_EQ(r.code, 1);
}
