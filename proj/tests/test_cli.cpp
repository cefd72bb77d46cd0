#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geoload/hash.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(GEOLOAD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Shared working directory with a small synthetic dataset and a quickly
/// trained model.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("geoload_cli_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    std::ofstream(root_ / "config.json") << R"({
      "architecture": {"gcn_dims": [4], "dense_dims": [8]},
      "trainer": {"max_epochs": 4, "patience": 3},
      "benchmark": {"hidden": [8]}
    })";
    ASSERT_EQ(run(cfg() + " synth --out " + path("data") + " --locations 6 --days 60 --seed 3"), 0);
    ASSERT_EQ(run(cfg() + " train --data " + path("data") + " --model " + path("model.json")), 0);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static std::string cfg() { return "--config " + path("config.json"); }
  static std::string path(const std::string& rel) { return (root_ / rel).string(); }

  static fs::path root_;
};

fs::path CliTest::root_;

}  // namespace

TEST_F(CliTest, SynthWritesDeterministicFiles) {
  for (const char* f : {"locations.csv", "load.csv", "weather.csv", "ground_truth.json"}) {
    EXPECT_TRUE(fs::exists(root_ / "data" / f)) << f;
  }
  ASSERT_EQ(run(cfg() + " synth --out " + path("again") + " --locations 6 --days 60 --seed 3"), 0);
  for (const char* f : {"locations.csv", "load.csv", "weather.csv", "ground_truth.json"}) {
    EXPECT_EQ(geoload::hash_hex(slurp(root_ / "data" / f)), geoload::hash_hex(slurp(root_ / "again" / f)))
        << f;
  }
  const auto truth = json::parse(slurp(root_ / "data" / "ground_truth.json"));
  EXPECT_EQ(truth.at("weights").size(), 6u);
}

TEST_F(CliTest, SynthRefusesOverwriteWithoutForce) {
  const std::string args = cfg() + " synth --out " + path("guarded") + " --locations 3 --days 60";
  ASSERT_EQ(run(args), 0);
  EXPECT_EQ(run(args), 2);
  EXPECT_EQ(run("--force " + args), 0);
}

TEST_F(CliTest, SynthGuards) {
  EXPECT_EQ(run("synth --out " + path("one") + " --locations 1"), 2);
  EXPECT_EQ(run("synth --out " + path("short") + " --days 10"), 2);
  EXPECT_EQ(run("synth --bogus-flag"), 2);
  EXPECT_EQ(run("nonsense"), 2);
}

TEST_F(CliTest, TrainWritesModelAndMonotoneHistory) {
  const auto model = json::parse(slurp(root_ / "model.json"));
  EXPECT_EQ(model.at("seed"), 42);
  EXPECT_TRUE(model.contains("config_hash"));
  std::ifstream in(root_ / "history.csv");
  std::string line;
  double prev = 1e300;
  int rows = 0;
  int best_col = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (best_col < 0) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (cells[k] == "best_validation_loss") best_col = static_cast<int>(k);
      }
      ASSERT_GE(best_col, 0) << line;
      continue;
    }
    const double best = std::stod(cells[best_col]);
    EXPECT_LE(best, prev);
    prev = best;
    ++rows;
  }
  EXPECT_GE(rows, 1);
}

TEST_F(CliTest, TrainNoMfBaseline) {
  ASSERT_EQ(run(cfg() + " train --no-mf --data " + path("data") + " --model " + path("nomf/model.json")), 0);
  const auto model = json::parse(slurp(root_ / "nomf" / "model.json"));
  EXPECT_TRUE(model.at("architecture").at("gcn_dims").empty());
}

TEST_F(CliTest, CorruptCsvIsExitTwo) {
  fs::create_directories(root_ / "corrupt");
  for (const char* f : {"locations.csv", "weather.csv"}) {
    fs::copy_file(root_ / "data" / f, root_ / "corrupt" / f, fs::copy_options::overwrite_existing);
  }
  std::ofstream(root_ / "corrupt" / "load.csv") << "timestamp,load_mw\n2021-01-01T00:00:00Z,abc\n";
  EXPECT_EQ(run(cfg() + " train --data " + path("corrupt") + " --model " + path("corrupt/m.json")), 2);
  EXPECT_EQ(run("--config " + path("missing.json") + " train --data " + path("data")), 2);
}

TEST_F(CliTest, ForecastFeedsReportReproducingBenchmark) {
  ASSERT_EQ(run(cfg() + " forecast --data " + path("data") + " --model " + path("model.json") +
                " --out " + path("fc.csv")),
            0);
  ASSERT_EQ(run(cfg() + " report --forecasts " + path("fc.csv") + " --json " + path("metrics.json") +
                " --csv " + path("metrics.csv")),
            0);
  ASSERT_EQ(run(cfg() + " benchmark --suite basic --data " + path("data") + " --model " +
                path("model.json") + " --out " + path("bench.json")),
            0);
  const auto metrics = json::parse(slurp(root_ / "metrics.json"));
  const auto bench = json::parse(slurp(root_ / "bench.json"));
  const json* proposed = nullptr;
  for (const auto& row : bench.at("rows")) {
    if (row.at("name") == "proposed") proposed = &row;
  }
  ASSERT_NE(proposed, nullptr);
  for (const char* col : {"MAPE", "MAPE_Noon", "MAPE_Night", "MAPE_Com", "MAE", "MAE_Com"}) {
    EXPECT_NEAR(metrics.at(col).get<double>(), proposed->at(col).get<double>(), 1e-9) << col;
  }
  const std::string header = slurp(root_ / "fc.csv");
  EXPECT_NE(header.find("timestamp,forecast_mw,actual_mw"), std::string::npos);
  EXPECT_NE(slurp(root_ / "metrics.csv").find("MAPE,MAPE_Noon,MAPE_Night,MAPE_Com"), std::string::npos);
}

TEST_F(CliTest, FullSuiteRows) {
  ASSERT_EQ(run(cfg() + " benchmark --suite full --data " + path("data") + " --model " +
                path("model.json") + " --out " + path("full.json")),
            0);
  const auto bench = json::parse(slurp(root_ / "full.json"));
  std::vector<std::string> names;
  for (const auto& row : bench.at("rows")) names.push_back(row.at("name"));
  const std::vector<std::string> expected_prefix{"L0", "L1", "L2", "L3", "L4", "L5",
                                                 "none", "all", "average"};
  ASSERT_GE(names.size(), expected_prefix.size() + 2);
  EXPECT_TRUE(std::equal(expected_prefix.begin(), expected_prefix.end(), names.begin()));
  EXPECT_EQ(names.back(), "proposed");
  const auto& ht = bench.at("hongtao");
  EXPECT_EQ(ht.at("ranking").size(), 6u);
  EXPECT_EQ(ht.at("validation_MAE").size(), 6u);
  EXPECT_EQ(ht.at("test_MAE").size(), 6u);
  EXPECT_GE(ht.at("k_star").get<int>(), 1);
}

TEST_F(CliTest, ExplainDeterministicAndGuarded) {
  const std::string base = cfg() + " explain --data " + path("data") + " --model " + path("model.json") +
                           " --stride 24 --seed 42";
  ASSERT_EQ(run(base + " --samples 2000 --out " + path("e1.json")), 0);
  ASSERT_EQ(run(base + " --samples 2000 --out " + path("e2.json")), 0);
  EXPECT_EQ(slurp(root_ / "e1.json"), slurp(root_ / "e2.json"));
  EXPECT_EQ(slurp(root_ / "e1.csv"), slurp(root_ / "e2.csv"));
  const auto e = json::parse(slurp(root_ / "e1.json"));
  for (const char* key : {"phi0", "phi", "ranking", "units", "P", "seed", "sample_count",
                          "condition_warning"}) {
    EXPECT_TRUE(e.contains(key)) << key;
  }
  EXPECT_EQ(run(base + " --samples 10 --out " + path("e3.json")), 2);
  EXPECT_FALSE(fs::exists(root_ / "e3.json"));
  ASSERT_EQ(run(base + " --exact --out " + path("exact.json")), 0);
  EXPECT_EQ(json::parse(slurp(root_ / "exact.json")).at("method"), "exact");
  EXPECT_EQ(run(base + " --sampling sideways --out " + path("e4.json")), 2);
}

TEST_F(CliTest, IncompatibleModelIsRejected) {
  ASSERT_EQ(run(cfg() + " synth --out " + path("other") + " --locations 4 --days 60"), 0);
  EXPECT_EQ(run(cfg() + " forecast --data " + path("other") + " --model " + path("model.json") +
                " --out " + path("x.csv")),
            2);
  auto model = json::parse(slurp(root_ / "model.json"));
  model["feature_schema"]["hash"] = "deadbeef";
  std::ofstream(root_ / "bad_model.json") << model.dump();
  EXPECT_EQ(run(cfg() + " forecast --data " + path("data") + " --model " + path("bad_model.json") +
                " --out " + path("y.csv")),
            2);
}
