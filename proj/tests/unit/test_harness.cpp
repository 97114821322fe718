#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lope/envs/tabular_env.hpp"
#include "lope/error.hpp"
#include "lope/estimators/estimators.hpp"
#include "lope/harness/experiments.hpp"
#include "lope/harness/metrics.hpp"
#include "lope/harness/parallel.hpp"
#include "lope/harness/report.hpp"
#include "lope/harness/theorem_suite.hpp"
#include "lope/policy_value.hpp"

namespace lope {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lope_test_" + name);
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

SweepConfig tiny_sweep() {
  SweepConfig s;
  s.base.env.n_users = 80;
  s.base.env.n_actions = 6;
  s.base.n = 150;
  s.base.replications = 6;
  s.base.seed = 5;
  s.parameter = SweepParameter::kN;
  s.grid = {100, 200};
  return s;
}

TEST(Metrics, ExactEstimatorHasZeroError) {
  const std::vector<double> t{1.0, 2.0, -3.0};
  const auto row = aggregate_metrics("exact", 0.0, t, t);
  EXPECT_EQ(row.mse, 0.0);
  EXPECT_EQ(row.squared_bias, 0.0);
  EXPECT_EQ(row.variance, 0.0);
  EXPECT_TRUE(row.complete);
}

TEST(Metrics, MseSplitsIntoBiasAndVariance) {
  const std::vector<double> est{1.0, 3.0, 2.0, 6.0};
  const std::vector<double> truth{0.0, 1.0, 0.0, 1.0};
  // errors 1, 2, 2, 5: mean 2.5, mse 34/4, variance 8.5 - 6.25.
  const auto row = aggregate_metrics("e", 1.0, est, truth);
  EXPECT_NEAR(row.mse, 8.5, 1e-12);
  EXPECT_NEAR(row.squared_bias, 6.25, 1e-12);
  EXPECT_NEAR(row.variance, 2.25, 1e-12);
  EXPECT_NEAR(row.mse, row.squared_bias + row.variance, 1e-12);
}

TEST(Metrics, NonFiniteEstimatesAreSkipped) {
  const auto row = aggregate_metrics("e", 0.0, {1.0, NAN, 1.0}, {0.0, 0.0, 0.0});
  EXPECT_FALSE(row.complete);
  EXPECT_EQ(row.n_replications, 2u);
  EXPECT_DOUBLE_EQ(row.mse, 1.0);
}

TEST(Parallel, EveryIndexRunsOnce) {
  std::vector<std::atomic<int>> hits(97);
  parallel_for(97, 4, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, LowestFailingIndexIsRethrown) {
  try {
    parallel_for(50, 3, [](std::size_t i) {
      if (i == 7 || i == 31) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "7");
  }
}

TEST(Experiments, ReplicationsAreDeterministic) {
  const auto cfg = tiny_sweep().base;
  const auto a = make_replication(cfg, 2, false);
  const auto b = make_replication(cfg, 2, false);
  EXPECT_EQ(a.dh.long_rewards, b.dh.long_rewards);
  EXPECT_EQ(a.ds.short_rewards, b.ds.short_rewards);
  EXPECT_EQ(a.true_value, b.true_value);
  EXPECT_NE(a.dh.long_rewards, make_replication(cfg, 3, false).dh.long_rewards);
  EXPECT_NEAR(a.true_value, policy_value_exact(a.target, a.env->q_table(), a.env->contexts().weights), 0.0);
}

TEST(Experiments, ApplyParameterRejectsFractionalCounts) {
  EXPECT_THROW(apply_parameter({}, SweepParameter::kN, 10.5), ValidationError);
  EXPECT_EQ(apply_parameter({}, SweepParameter::kNClusters, 5).env.n_clusters, 5u);
  EXPECT_DOUBLE_EQ(apply_parameter({}, SweepParameter::kSigmaS, 2).env.sigma_s, 2.0);
}

TEST(Experiments, ExperimentConfigJsonRoundTrip) {
  auto cfg = tiny_sweep().base;
  cfg.estimators = {"dr", "lope"};
  EXPECT_EQ(to_json(experiment_config_from_json(to_json(cfg))), to_json(cfg));
  EXPECT_THROW(experiment_config_from_json({{"replicates", 3}}), ValidationError);
}

TEST(Experiments, SweepDoesNotDependOnWorkerCount) {
  auto one = tiny_sweep();
  auto three = tiny_sweep();
  three.base.workers = 3;
  const auto a = run_evaluation_sweep(one);
  const auto b = run_evaluation_sweep(three);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  ASSERT_EQ(a.rows.size(), 10u);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].estimator, b.rows[i].estimator);
    EXPECT_EQ(a.rows[i].mse, b.rows[i].mse);
    EXPECT_EQ(a.rows[i].variance, b.rows[i].variance);
  }
}

TEST(Experiments, FailingEstimatorIsRecordedNotFatal) {
  NamedEstimator boom{"boom", [](const Replication&) -> double { throw NumericError("nope"); }, false};
  const auto rep = run_evaluation_sweep(tiny_sweep(), {standard_estimator("ips"), boom});
  EXPECT_FALSE(rep.failures.empty());
  EXPECT_TRUE(rep.rows[0].complete);
  EXPECT_FALSE(rep.rows[1].complete);
}

TEST(Experiments, AvgSkylineIsUnbiased) {
  auto s = tiny_sweep();
  s.base.replications = 200;
  s.grid = {200};
  const auto rep = run_evaluation_sweep(s, {standard_estimator("avg")});
  const auto& row = rep.rows.front();
  // Bias^2 of a mean of R unbiased errors has expectation var / R.
  EXPECT_LE(row.squared_bias, 10.0 * row.variance / 200.0);
}

TEST(Experiments, IpsMseMatchesExactVarianceOverN) {
  const auto env = random_tabular_env(3);
  const auto pi0 = random_tabular_policy(4, 3, 4);
  const auto pi1 = random_tabular_policy(5, 3, 4);
  const auto moments = tabular_exact_kernel_moments(env, pi0, ips_kernel(pi1));
  const std::size_t n = 10000, R = 200;
  double mse = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    const double e = ips_estimate(env.sample_historical(pi0, n, 1000 + r), pi1).value - env.value(pi1);
    mse += e * e;
  }
  mse /= static_cast<double>(R);
  const double expected = moments.variance / static_cast<double>(n);
  // The ratio of a chi-square(R) / R is within 30% with overwhelming probability at R = 200.
  EXPECT_NEAR(mse / expected, 1.0, 0.3);
}

TEST(Experiments, SelectionAccuracyOfOracleAndCoin) {
  NamedEstimator exact{"exact",
                       [](const Replication& r) { return on_policy_value(r.dh) + r.true_value - r.logging_value; },
                       false};
  NamedEstimator coin{"coin",
                      [](const Replication& r) {
                        const auto bit = static_cast<long long>(std::floor(std::abs(r.dh.long_rewards[0]) * 1e6)) & 1;
                        return on_policy_value(r.dh) + (bit ? 1.0 : -1.0);
                      },
                      false};
  auto s = tiny_sweep();
  s.base.replications = 200;
  s.grid = {100};
  const auto rep = run_selection_experiment(s, {exact, coin});
  EXPECT_DOUBLE_EQ(rep.rows[0].accuracy, 1.0);
  EXPECT_NEAR(rep.rows[1].accuracy, 0.5, 0.15);
}

TEST(Experiments, OplReportsValueRelativeToLopePg) {
  OplConfig cfg;
  cfg.sweep = tiny_sweep();
  cfg.sweep.base.replications = 2;
  cfg.sweep.grid = {150};
  cfg.learner.parameterization = PolicyParameterization::kLinear;
  cfg.learner.epochs = 10;
  const auto rep = run_opl_experiment(cfg);
  ASSERT_EQ(rep.rows.size(), 4u);
  for (const auto& row : rep.rows) {
    EXPECT_TRUE(std::isfinite(row.mean_value)) << row.learner;
    if (row.learner == "lope_pg") EXPECT_DOUBLE_EQ(row.relative_value, 1.0);
  }
}

TEST(TheoremSuite, AllChecksPassOffPolicy) {
  const auto rep = run_theorem_suite({.seed = 1, .n_envs = 5});
  for (const auto& c : rep.checks) EXPECT_TRUE(c.passed || c.informational) << c.name << " " << c.value;
  EXPECT_TRUE(rep.find("negative_control").passed);
}

TEST(TheoremSuite, OnPolicyGapsVanish) {
  const auto rep = run_theorem_suite({.seed = 2, .n_envs = 5, .on_policy = true});
  EXPECT_TRUE(rep.all_passed());
  EXPECT_LE(rep.max_identity_gap(), 1e-5);
}

TEST(Report, SweepCsvRoundTripAndSvgDeterminism) {
  const auto dir = scratch_dir("report");
  const auto rows = run_evaluation_sweep(tiny_sweep()).rows;
  write_sweep_csv(dir / "sweep.csv", rows);
  const auto back = read_sweep_csv(dir / "sweep.csv");
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].estimator, rows[i].estimator);
    EXPECT_EQ(back[i].mse, rows[i].mse);
    EXPECT_EQ(back[i].n_replications, rows[i].n_replications);
  }
  const auto first = write_sweep_svgs(dir / "a", "n", back);
  const auto second = write_sweep_svgs(dir / "b", "n", read_sweep_csv(dir / "sweep.csv"));
  ASSERT_EQ(first.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(slurp(first[i]), slurp(second[i]));
  EXPECT_NE(slurp(first[0]).find("<svg"), std::string::npos);
}

}  // namespace
}  // namespace lope
