#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lope/dataset_io.hpp"
#include "lope/error.hpp"
#include "lope/policy_value.hpp"
#include "lope/random.hpp"
#include "lope/types.hpp"

namespace lope {
namespace {

TEST(Random, DeriveSeedIsStableAndPathSensitive) {
  EXPECT_EQ(derive_seed(7, {1, 2}), derive_seed(7, {1, 2}));
  EXPECT_NE(derive_seed(7, {1, 2}), derive_seed(7, {2, 1}));
  EXPECT_NE(derive_seed(7, {1}), derive_seed(8, {1}));
  EXPECT_NE(derive_seed(7, {}), derive_seed(7, {0}));
}

TEST(Random, CategoricalNeverHitsZeroMass) {
  Rng rng = make_rng(3);
  const std::vector<double> p{0.0, 0.5, 0.0, 0.5, 0.0};
  for (int i = 0; i < 10000; ++i) {
    const auto k = sample_categorical(p, rng);
    EXPECT_TRUE(k == 1 || k == 3);
  }
}

TEST(Random, CategoricalFrequenciesMatch) {
  Rng rng = make_rng(11);
  const std::vector<double> p{0.2, 0.3, 0.5};
  std::vector<int> count(3, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++count[sample_categorical(p, rng)];
  for (int k = 0; k < 3; ++k) {
    const double se = std::sqrt(p[k] * (1 - p[k]) / n);
    EXPECT_NEAR(count[k] / double(n), p[k], 4 * se);
  }
}

TEST(TabularPolicy, RejectsRowsThatAreNotDistributions) {
  Matrix bad(1, 2);
  bad << 0.7, 0.7;
  EXPECT_THROW(TabularPolicy{bad}, ValidationError);
  bad << -0.1, 1.1;
  EXPECT_THROW(TabularPolicy{bad}, ValidationError);
}

TEST(TabularPolicy, FactoriesProduceDistributions) {
  const auto u = TabularPolicy::uniform(3, 4);
  EXPECT_DOUBLE_EQ(u.prob(2, 3), 0.25);
  const auto d = TabularPolicy::deterministic({1, 0, 3}, 4);
  EXPECT_DOUBLE_EQ(d.prob(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(d.prob(2, 3), 1.0);
  const auto m = TabularPolicy::mixture(0.25, d, u);
  EXPECT_DOUBLE_EQ(m.prob(0, 1), 0.25 + 0.75 * 0.25);
}

TEST(PolicyValue, MatchesHandComputation) {
  Matrix q(2, 2);
  q << 1, 3, 2, 0;
  Matrix p(2, 2);
  p << 0.5, 0.5, 0.1, 0.9;
  Vector w(2);
  w << 0.25, 0.75;
  EXPECT_NEAR(policy_value_exact(TabularPolicy(p), q, w), 0.25 * 2.0 + 0.75 * 0.2, 1e-15);
}

TEST(PolicyValue, OnPolicyValueIsRewardMean) {
  HistoricalDataset dh;
  dh.dim_s = 1;
  const double s[1] = {0.0};
  dh.push_back(0, 0, 0.5, s, 1.0);
  dh.push_back(0, 1, 0.5, s, 4.0);
  EXPECT_DOUBLE_EQ(on_policy_value(dh), 2.5);
}

HistoricalDataset small_dataset() {
  HistoricalDataset dh;
  dh.dim_s = 2;
  const double s0[2] = {0.1, -1.0 / 3.0};
  const double s1[2] = {1e-300, 12345.678};
  dh.push_back(3, 1, 0.2, s0, 0.5);
  dh.push_back(0, 2, 1.0 / 7.0, s1, -2.25);
  return dh;
}

TEST(DatasetIo, HistoricalCsvRoundTripsExactly) {
  const auto dh = small_dataset();
  std::stringstream ss;
  write_historical_csv(ss, dh);
  const auto back = read_historical_csv(ss);
  EXPECT_EQ(back.users, dh.users);
  EXPECT_EQ(back.actions, dh.actions);
  EXPECT_EQ(back.propensities, dh.propensities);
  EXPECT_EQ(back.short_rewards, dh.short_rewards);
  EXPECT_EQ(back.long_rewards, dh.long_rewards);
}

TEST(DatasetIo, HeaderOnlyCsvIsEmptyDataset) {
  std::stringstream ss("user_index,action,propensity,s_0,r\n");
  const auto dh = read_historical_csv(ss);
  EXPECT_TRUE(dh.empty());
  EXPECT_EQ(dh.dim_s, 1u);
}

TEST(DatasetIo, MalformedRowsAreRejected) {
  std::stringstream ss("user_index,action,propensity,s_0,r\n1,2,0.5,oops,1\n");
  EXPECT_THROW(read_historical_csv(ss), ValidationError);
}

TEST(DatasetIo, PolicyJsonRoundTrip) {
  Matrix p(2, 3);
  p << 0.2, 0.3, 0.5, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0;
  const auto back = policy_from_json(policy_to_json(TabularPolicy(p)));
  EXPECT_EQ(back.probs(), p);
}

TEST(Kernel, MeanSumsInIndexOrder) {
  const auto dh = small_dataset();
  const double m = kernel_mean(dh, [](const HistoricalRecord& r) { return r.long_reward; });
  EXPECT_DOUBLE_EQ(m, (0.5 - 2.25) / 2);
}

}  // namespace
}  // namespace lope
