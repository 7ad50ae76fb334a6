#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "indid/cli.hpp"
#include "test_util.hpp"

namespace indid {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "indid_cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(testing::scratch_dir("cli"));
    auto r = run({"generate", "--out", (*root_ / "data").string(), "--seed", "5", "--set", "data.n_train=40", "--set",
                  "data.n_test=20", "--set", "data.length=24"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { delete root_; }
  static fs::path dir(const std::string& name) { return *root_ / name; }
  static std::vector<std::string> train_args(const std::string& out) {
    return {"train", "--data", dir("data").string(), "--out", dir(out).string(), "--seed", "5",
            "--set", "train.max_epochs=3", "--set", "train.batch_size=8"};
  }
  static inline fs::path* root_ = nullptr;
};

TEST_F(Cli, GenerateWritesSplitsAndConfig) {
  EXPECT_TRUE(fs::exists(dir("data") / "train" / "data.csv"));
  EXPECT_TRUE(fs::exists(dir("data") / "test" / "labels.csv"));
  EXPECT_EQ(line_count(dir("data") / "test" / "labels.csv"), 21u);
  const auto echoed = slurp(dir("data") / "config.resolved.toml");
  EXPECT_NE(echoed.find("n_train = 40"), std::string::npos);
  EXPECT_NE(echoed.find("seed = 5"), std::string::npos);
}

TEST_F(Cli, GenerateHighDimensional) {
  auto r = run({"generate", "--out", dir("data100").string(), "--set", "data.dim=100", "--set", "data.n_train=2",
                "--set", "data.n_test=1", "--set", "data.length=4"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(dir("data100") / "train" / "data.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 101);
}

TEST_F(Cli, BadRangeIsConfigError) {
  auto r = run({"generate", "--out", dir("bad").string(), "--set", "data.post_mean_lo=1.0"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("post_mean_lo"), std::string::npos);
}

TEST_F(Cli, UnknownFlagIsConfigError) { EXPECT_EQ(run({"train", "--bogus"}).code, 2); }

TEST_F(Cli, MissingDataIsDataError) {
  EXPECT_EQ(run({"train", "--data", dir("nope").string(), "--out", dir("x").string()}).code, 3);
}

TEST_F(Cli, TrainWritesArtifacts) {
  auto r = run(train_args("run"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir("run") / "model.json"));
  EXPECT_TRUE(fs::exists(dir("run") / "config.resolved.toml"));
  EXPECT_EQ(line_count(dir("run") / "train_log.jsonl"), 3u);
}

TEST_F(Cli, TrainTwoPhaseLog) {
  auto args = train_args("two");
  args.insert(args.end(), {"--set", "train.regime=\"bce_indid\""});
  ASSERT_EQ(run(args).code, 0);
  const auto log = slurp(dir("two") / "train_log.jsonl");
  EXPECT_NE(log.find("\"phase\":\"bce\""), std::string::npos);
  EXPECT_NE(log.find("\"phase\":\"indid\""), std::string::npos);
}

TEST_F(Cli, TrainDeterministicAcrossThreads) {
  auto a = train_args("det1"), b = train_args("det8");
  b.insert(b.end(), {"--threads", "8"});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  EXPECT_EQ(slurp(dir("det1") / "model.json"), slurp(dir("det8") / "model.json"));
}

TEST_F(Cli, EvalCheckpointWritesCurve) {
  ASSERT_EQ(run(train_args("forEval")).code, 0);
  auto r = run({"eval", "--data", dir("data").string(), "--out", dir("ev").string(), "--checkpoint",
                (dir("forEval") / "model.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(dir("ev") / "curve.csv"), 42u);
  auto j = nlohmann::json::parse(slurp(dir("ev") / "metrics.json"));
  EXPECT_EQ(j["n_sequences"], 20);
  EXPECT_EQ(j["grid"].size(), 41u);
}

TEST_F(Cli, EvalOracleBaseline) {
  auto r = run({"eval", "--data", dir("data").string(), "--out", dir("oracle").string(), "--baseline", "oracle"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(slurp(dir("oracle") / "metrics.json"));
  EXPECT_EQ(j["f1"], 1.0);
  EXPECT_EQ(j["mean_dd"], 0.0);
}

TEST_F(Cli, EvalPeltReportsPenalty) {
  auto r = run({"eval", "--data", dir("data").string(), "--out", dir("pelt").string(), "--baseline", "pelt"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(slurp(dir("pelt") / "metrics.json"));
  EXPECT_TRUE(j["hyperparameters"].contains("penalty"));
  EXPECT_GT(j["hyperparameters"]["penalty"].get<double>(), 0.0);
}

TEST_F(Cli, EvalNeedsExactlyOneTarget) {
  EXPECT_EQ(run({"eval", "--data", dir("data").string(), "--out", dir("e2").string()}).code, 2);
  EXPECT_EQ(run({"eval", "--data", dir("data").string(), "--out", dir("e2").string(), "--baseline", "magic"}).code, 2);
}

TEST_F(Cli, CorruptCheckpointIsDataError) {
  fs::create_directories(dir("junk"));
  std::ofstream(dir("junk") / "model.json") << "{\"format\": 1}";
  EXPECT_EQ(run({"eval", "--data", dir("data").string(), "--out", dir("e3").string(), "--checkpoint",
                 (dir("junk") / "model.json").string()})
                .code,
            3);
}

TEST_F(Cli, AblationTable) {
  auto r = run({"ablate-horizon", "--data", dir("data").string(), "--out", dir("abl").string(), "--seed", "5", "--set",
                "train.max_epochs=1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(dir("abl") / "ablation.csv"), 7u);
  auto j = nlohmann::json::parse(slurp(dir("abl") / "ablation.json"));
  double prev_gap = std::numeric_limits<double>::infinity();
  for (const auto& row : j["rows"]) {
    EXPECT_LE(row["loss_gap"].get<double>(), prev_gap + 1e-12);
    prev_gap = row["loss_gap"].get<double>();
  }
}

}  // namespace
}  // namespace indid
