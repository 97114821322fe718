#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace lope::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "lope");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lope_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path small_experiment(const fs::path& dir) {
  const fs::path p = dir / "experiment.json";
  std::ofstream(p) << R"({"env": {"n_users": 60, "n_actions": 5}, "n": 100, "replications": 3})";
  return p;
}

TEST(Cli, OracleCheckPasses) {
  const auto dir = fresh_dir("oracle");
  const auto r = invoke({"oracle-check", "--envs", "3", "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("max identity gap"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "o" / "manifest.json"));
}

TEST(Cli, UnknownFlagIsAUsageError) {
  const auto r = invoke({"sweep", "--grid", "1", "--bogus"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(invoke({"no-such-command"}).code, 1);
}

TEST(Cli, EmptyHistoricalDataIsRejected) {
  const auto dir = fresh_dir("empty");
  const auto sim = invoke({"simulate", "--n", "20", "--out", (dir / "sim").string()});
  ASSERT_EQ(sim.code, 0) << sim.err;
  std::ofstream(dir / "empty.csv") << "user_index,action,propensity,s_0,s_1,s_2,r\n";
  const auto r = invoke({"estimate", "--estimator", "ips", "--data", (dir / "empty.csv").string(), "--policy",
                         (dir / "sim" / "pi1.json").string(), "--out", (dir / "est").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("empty historical dataset"), std::string::npos) << r.err;
}

TEST(Cli, EstimateOnSimulatedData) {
  const auto dir = fresh_dir("estimate");
  ASSERT_EQ(invoke({"simulate", "--n", "300", "--out", (dir / "sim").string()}).code, 0);
  const auto sim = dir / "sim";
  const auto r = invoke({"estimate", "--estimator", "lope", "--data", (sim / "dh.csv").string(), "--policy",
                         (sim / "pi1.json").string(), "--logging", (sim / "pi0.json").string(), "--contexts",
                         (sim / "contexts.csv").string(), "--out", (dir / "est").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(dir / "est" / "estimate.json"));
  EXPECT_TRUE(j.contains("value"));
}

TEST(Cli, SweepWritesCsvChartsAndManifest) {
  const auto dir = fresh_dir("sweep");
  const auto cfg = small_experiment(dir);
  const auto out = dir / "run";
  const auto r = invoke({"sweep", "--param", "n", "--grid", "50,100", "--config", cfg.string(), "--seed", "3",
                         "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"sweep_n.csv", "sweep_n_mse.svg", "sweep_n_bias2.svg", "sweep_n_var.svg", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["command"], "sweep");
  EXPECT_EQ(m["seed"], 3);
  for (const char* k : {"argv", "config", "version", "started_at", "outputs"}) EXPECT_TRUE(m.contains(k)) << k;

  // Charts redrawn from the stored CSV match the originals byte for byte.
  const auto redraw = dir / "redraw";
  ASSERT_EQ(invoke({"report", "--csv", (out / "sweep_n.csv").string(), "--out", redraw.string()}).code, 0);
  for (const char* f : {"sweep_n_mse.svg", "sweep_n_bias2.svg", "sweep_n_var.svg"}) {
    EXPECT_EQ(slurp(out / f), slurp(redraw / f)) << f;
  }

  // Same seed, same numbers.
  const auto again = dir / "again";
  ASSERT_EQ(invoke({"sweep", "--param", "n", "--grid", "50,100", "--config", cfg.string(), "--seed", "3", "--out",
                    again.string(), "--workers", "2"})
                .code,
            0);
  EXPECT_EQ(slurp(out / "sweep_n.csv"), slurp(again / "sweep_n.csv"));
}

TEST(Cli, MissingConfigFileIsAValidationError) {
  const auto r = invoke({"sweep", "--grid", "1", "--config", "/nonexistent/config.json"});
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, EnvsDumpWritesParameters) {
  const auto dir = fresh_dir("dump");
  ASSERT_EQ(invoke({"envs", "dump", "--out", dir.string()}).code, 0);
  EXPECT_TRUE(fs::exists(dir / "env_parameters.csv"));
  EXPECT_TRUE(fs::exists(dir / "env_config.json"));
}

}  // namespace
}  // namespace lope::cli
