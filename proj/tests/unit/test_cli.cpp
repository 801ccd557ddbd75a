#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "json.hpp"

using testing_util::TempDir;

namespace {

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + TREESMC_CLI + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream f(p);
  return nlohmann::json::parse(f);
}

const char* kData = "0.1,0.3,0\n0.5,0.2,1\n0.7,0.9,1\n0.3,0.6,0\n0.2,0.1,0\n0.9,0.4,1\n";

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  TempDir dir;
  auto data = dir.write("d.csv", kData).string();
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("smc --data " + data + " --particles 10 --islands 3"), 2);
  EXPECT_EQ(run_cli("smc --data " + data + " --proposal greedy"), 2);
  EXPECT_EQ(run_cli("smc --data " + data + " --alpha-split 1.5"), 2);
  EXPECT_EQ(run_cli("smc --particles ten --data " + data), 2);
  EXPECT_EQ(run_cli("smc"), 2);
  EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Cli, DataErrorsExitOne) {
  TempDir dir;
  EXPECT_EQ(run_cli("smc --data " + (dir.path() / "missing.csv").string()), 1);
  auto bad = dir.write("bad.csv", "0.1,0\nfoo,1\n").string();
  EXPECT_EQ(run_cli("mcmc --data " + bad), 1);
  auto big = dir.write("big.csv", "0.1,0.2,0\n0.2,0.5,1\n0.3,0.1,0\n0.4,0.9,1\n0.5,0.3,0\n"
                                  "0.6,0.7,1\n0.7,0.4,0\n0.8,0.8,1\n").string();
  EXPECT_EQ(run_cli("oracle --data " + big + " --max-nodes-guard 10"), 1);
}

TEST(Cli, OracleWritesArtifacts) {
  TempDir dir;
  auto data = dir.write("n2.csv", "0.1,a\n0.5,b\n").string();
  auto out = dir.path() / "o";
  ASSERT_EQ(run_cli("oracle --data " + data + " --alpha 2 --beta-split 0 --out-dir " +
                    out.string()),
            0);
  auto report = read_json(out / "report.json");
  EXPECT_NEAR(report["marginal"].get<double>(), 0.24583333333, 1e-9);
  EXPECT_TRUE(std::filesystem::exists(out / "diagnostics.csv"));
  EXPECT_TRUE(std::filesystem::exists(out / "manifest.json"));
}

TEST(Cli, EnvironmentSetsDefaultOutputDirectoryOnly) {
  TempDir dir;
  auto data = dir.write("d.csv", kData).string();
  const std::string env = "TREESMC_OUT_DIR=" + (dir.path() / "env").string();
  ASSERT_EQ(run_cli("mcmc --iterations 10 --data " + data, env), 0);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "env" / "mcmc" / "report.json"));
  ASSERT_EQ(run_cli("mcmc --iterations 10 --data " + data + " --out-dir " +
                        (dir.path() / "flag").string(),
                    env),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "flag" / "report.json"));
}

TEST(Cli, ReplayReproducesMetrics) {
  TempDir dir;
  auto data = dir.write("d.csv", kData).string();
  auto first = dir.path() / "first", second = dir.path() / "second";
  ASSERT_EQ(run_cli("smc --data " + data + " --particles 50 --islands 5 --proposal empirical "
                    "--expansion layer --resampler systematic --seed 9 --split-frac 0.5 "
                    "--out-dir " + first.string()),
            0);
  ASSERT_EQ(run_cli("replay --manifest " + (first / "manifest.json").string() + " --out-dir " +
                    second.string()),
            0);
  auto a = read_json(first / "report.json"), b = read_json(second / "report.json");
  for (auto* r : {&a, &b}) {
    r->erase("train_seconds");
    r->erase("predict_seconds");
  }
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(a["config"]["resampler"], "systematic");
}

TEST(Cli, SweepAppendsRows) {
  TempDir dir;
  auto data = dir.write("d.csv", kData).string();
  auto grid = dir.write("g.json", R"({"runs": [{"particles": 10}, {"particles": 100},
                                               {"particles": 100, "islands": 7}]})").string();
  auto out = dir.path() / "sweep";
  ASSERT_EQ(run_cli("sweep --grid " + grid + " --data " + data + " --out-dir " + out.string()), 0);
  std::ifstream f(out / "results.csv");
  std::string line;
  int rows = 0, errors = 0;
  std::getline(f, line);
  EXPECT_EQ(line.rfind("config_hash,", 0), 0u);
  while (std::getline(f, line)) {
    ++rows;
    errors += line.find(",error,") != std::string::npos;
  }
  EXPECT_EQ(rows, 3);
  EXPECT_EQ(errors, 1);
}
