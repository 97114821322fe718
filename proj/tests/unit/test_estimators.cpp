#include <gtest/gtest.h>

#include <cmath>

#include "lope/envs/synthetic_env.hpp"
#include "lope/envs/tabular_env.hpp"
#include "lope/error.hpp"
#include "lope/estimators/estimators.hpp"
#include "lope/estimators/features.hpp"
#include "lope/estimators/reward_models.hpp"
#include "lope/estimators/surrogate_weights.hpp"
#include "lope/harness/theorem_suite.hpp"

namespace lope {
namespace {

// p(s|x,a) = 1{s = a}: the surrogate reveals the action.
TabularEnv revealing_env(std::uint64_t seed) {
  TabularEnvOptions opt;
  opt.n_contexts = 3;
  opt.n_actions = 4;
  opt.n_surrogates = 4;
  const auto base = random_tabular_env(seed, opt);
  std::vector<double> ps, q, var;
  for (std::size_t x = 0; x < 3; ++x)
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t s = 0; s < 4; ++s) {
        ps.push_back(s == a ? 1.0 : 0.0);
        q.push_back(base.q(x, a, s));
        var.push_back(base.noise_var(x, a, s));
      }
  return TabularEnv(base.p_x(), 4, 4, ps, q, var);
}

Matrix random_table(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = standard_normal(rng);
  return m;
}

TEST(Estimators, LopeEqualsDrWhenSurrogateRevealsAction) {
  const auto env = revealing_env(1);
  const auto pi0 = random_tabular_policy(2, 3, 4);
  const auto pi1 = random_tabular_policy(3, 3, 4);
  const Matrix q_hat = random_table(3, 4, 4);
  const auto weights = exact_tabular_weights(env, pi0, pi1);
  std::vector<double> table;
  for (std::size_t x = 0; x < 3; ++x)
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t s = 0; s < 4; ++s) table.push_back(q_hat(x, a));
  const auto h_hat = table_reward_model(env, table);
  const auto lope = lope_kernel(weights, h_hat, q_hat);
  const auto dr = dr_kernel(pi1, q_hat);
  const auto dh = env.sample_historical(pi0, 500, 5);
  for (std::size_t i = 0; i < dh.size(); ++i) EXPECT_NEAR(lope(dh.record(i)), dr(dh.record(i)), 1e-12);
}

TEST(Estimators, DrWithZeroModelIsIps) {
  const auto env = random_tabular_env(6);
  const auto pi0 = random_tabular_policy(7, 3, 4);
  const auto pi1 = random_tabular_policy(8, 3, 4);
  const auto dh = env.sample_historical(pi0, 300, 9);
  EXPECT_NEAR(dr_estimate(dh, pi1, Matrix::Zero(3, 4)).value, ips_estimate(dh, pi1).value, 1e-13);
}

TEST(Estimators, OnPolicyWeightsAreOne) {
  const auto env = random_tabular_env(10);
  const auto pi0 = random_tabular_policy(11, 3, 4);
  const auto dh = env.sample_historical(pi0, 300, 12);
  const auto w = exact_tabular_weights(env, pi0, pi0);
  double mean = 0.0;
  for (std::size_t i = 0; i < dh.size(); ++i) {
    EXPECT_NEAR(w.weight(dh.users[i], dh.short_row(i)), 1.0, 1e-12);
    mean += dh.long_rewards[i];
  }
  EXPECT_NEAR(ips_estimate(dh, pi0).value, mean / 300.0, 1e-12);
}

TEST(Estimators, FittedWeightsAreOneOnPolicy) {
  auto c = SyntheticEnvConfig{};
  c.n_users = 100;
  const auto env = SyntheticEnv::build(c);
  const auto pi0 = env.make_logging_policy(0.5);
  const auto dh = env.sample_historical(pi0, 400, 1);
  for (const auto model : {WeightModel::kGaussianBayes, WeightModel::kClassifier}) {
    NuisanceConfig cfg;
    cfg.weight_model = model;
    cfg.classifier.epochs = 20;
    const auto w = estimate_surrogate_weights(dh, env.contexts(), pi0, pi0, cfg);
    for (std::size_t i = 0; i < dh.size(); i += 17) EXPECT_NEAR(w.weight(dh.users[i], dh.short_row(i)), 1.0, 1e-9);
  }
}

// Unbiasedness against the exact tabular expectation, independent of the
// theorem suite's own bookkeeping.
TEST(Estimators, ExactExpectationsOnTabularEnvs) {
  for (std::uint64_t k = 0; k < 5; ++k) {
    TabularEnvOptions general;
    const auto env = random_tabular_env(100 + k, general);
    const auto pi0 = random_tabular_policy(200 + k, 3, 4);
    const auto pi1 = random_tabular_policy(300 + k, 3, 4);
    const double truth = env.value(pi1);
    EXPECT_NEAR(tabular_exact_estimator_expectation(env, pi0, ips_kernel(pi1)), truth, 1e-12);
    EXPECT_NEAR(tabular_exact_estimator_expectation(env, pi0, dr_kernel(pi1, random_table(3, 4, k))), truth, 1e-12);

    // CPC model: exact up to an arbitrary (x,s) shift.
    const auto h_cpc = cpc_reward_model(env, random_table(3, 3, 400 + k));
    const auto w = exact_tabular_weights(env, pi0, pi1);
    EXPECT_NEAR(tabular_exact_estimator_expectation(env, pi0, lope_kernel(w, h_cpc, exact_h_bar(env, h_cpc))), truth,
                1e-12);

    // Under surrogacy any h_hat(x,s) works.
    TabularEnvOptions sur;
    sur.structure = TabularRewardStructure::kSurrogacy;
    const auto senv = random_tabular_env(500 + k, sur);
    const Matrix phi = random_table(3, 3, 600 + k);
    std::vector<double> table;
    for (std::size_t x = 0; x < 3; ++x)
      for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t s = 0; s < 3; ++s) table.push_back(phi(x, s));
    const auto h = table_reward_model(senv, table);
    const auto sw = exact_tabular_weights(senv, pi0, pi1);
    EXPECT_NEAR(tabular_exact_estimator_expectation(senv, pi0, lope_kernel(sw, h, exact_h_bar(senv, h))),
                senv.value(pi1), 1e-12);
  }
}

TEST(Estimators, LopeWithoutCpcModelIsBiasedUnderViolation) {
  const auto env = random_tabular_env(42);
  const auto pi0 = random_tabular_policy(43, 3, 4);
  const auto pi1 = random_tabular_policy(44, 3, 4);
  const auto zero = table_reward_model(env, std::vector<double>(36, 0.0));
  const auto w = exact_tabular_weights(env, pi0, pi1);
  const double e = tabular_exact_estimator_expectation(env, pi0, lope_kernel(w, zero, Matrix::Zero(3, 4)));
  EXPECT_GT(std::abs(e - env.value(pi1)), 1e-3);
}

// LCI with the exact E_pi0[r | x, s] is unbiased under surrogacy and biased
// when the action affects r beyond s.
TEST(Estimators, LciExpectationTracksSurrogacy) {
  auto lci_expectation = [](const TabularEnv& env, const TabularPolicy& pi0, const TabularPolicy& pi1) {
    double total = 0.0;
    for (std::size_t x = 0; x < env.n_contexts(); ++x) {
      const Vector ps1 = tabular_marginal_surrogate(env, pi1, x);
      for (std::size_t s = 0; s < env.n_surrogates(); ++s) {
        const Vector post = env.logging_posterior(pi0, x, s);
        double qxs = 0.0;
        for (std::size_t a = 0; a < env.n_actions(); ++a) qxs += post(a) * env.q(x, a, s);
        total += env.p_x()(x) * ps1(s) * qxs;
      }
    }
    return total;
  };
  const auto pi0 = random_tabular_policy(50, 3, 4);
  const auto pi1 = random_tabular_policy(51, 3, 4);
  TabularEnvOptions sur;
  sur.structure = TabularRewardStructure::kSurrogacy;
  const auto senv = random_tabular_env(52, sur);
  EXPECT_NEAR(lci_expectation(senv, pi0, pi1), senv.value(pi1), 1e-12);
  const auto genv = random_tabular_env(53);
  EXPECT_GT(std::abs(lci_expectation(genv, pi0, pi1) - genv.value(pi1)), 1e-3);
}

TEST(Estimators, LciAveragesTheSurrogateModel) {
  RewardModelBundle b;
  b.dim_s = 1;
  b.q_hat_xs = [](std::size_t u, std::span<const double> s) { return static_cast<double>(u) + 2 * s[0]; };
  ShortTermDataset ds;
  ds.dim_s = 1;
  const double s0[1] = {1.0}, s1[1] = {-0.5};
  ds.push_back(0, s0);
  ds.push_back(3, s1);
  EXPECT_DOUBLE_EQ(lci_estimate(ds, b).value, (2.0 + 2.0) / 2);
}

TEST(Estimators, AvgIsSampleMean) {
  LongTermOutcomes o;
  o.rewards = {1.0, 2.0, 6.0};
  EXPECT_DOUBLE_EQ(avg_estimate(o).value, 3.0);
  EXPECT_THROW(avg_estimate(LongTermOutcomes{}), PreconditionError);
}

// r -> a r + b with ridge nuisances refitted: DR and LOPE move exactly the same way.
TEST(Estimators, AffineEquivarianceWithRefittedModels) {
  auto c = SyntheticEnvConfig{};
  c.n_users = 200;
  c.n_actions = 10;
  const auto env = SyntheticEnv::build(c);
  const auto pi0 = env.make_logging_policy(0.5);
  const auto pi1 = env.make_target_policy(0.1);
  const auto dh = env.sample_historical(pi0, 600, 3);
  auto shifted = dh;
  const double a = -2.5, b = 7.0;
  for (auto& r : shifted.long_rewards) r = a * r + b;
  // Centered ridge is linear in y, so the default penalty keeps this exact.
  const NuisanceConfig cfg;
  const auto m0 = fit_reward_models(dh, env.contexts(), env.n_actions(), cfg);
  const auto m1 = fit_reward_models(shifted, env.contexts(), env.n_actions(), cfg);
  const auto w = estimate_surrogate_weights(dh, env.contexts(), pi1, pi0, cfg);
  EXPECT_NEAR(dr_estimate(shifted, pi1, m1.q_hat_xa).value, a * dr_estimate(dh, pi1, m0.q_hat_xa).value + b, 1e-8);
  EXPECT_NEAR(lope_estimate(shifted, w, m1).value, a * lope_estimate(dh, w, m0).value + b, 1e-8);
}

TEST(Estimators, EmptyHistoricalDataIsAPreconditionError) {
  const HistoricalDataset empty{.dim_s = 1};
  EXPECT_THROW(ips_estimate(empty, TabularPolicy::uniform(2, 2)), PreconditionError);
  EXPECT_THROW(dr_estimate(empty, TabularPolicy::uniform(2, 2), Matrix::Zero(2, 2)), PreconditionError);
}

TEST(Estimators, TargetOutsideLoggingSupportIsRejected) {
  Matrix p0(1, 2), p1(1, 2);
  p0 << 1.0, 0.0;
  p1 << 0.5, 0.5;
  const ConditionalFn post = [](std::size_t, std::span<const double>) { return Vector::Unit(2, 0); };
  EXPECT_THROW(SurrogateWeightModel(post, TabularPolicy(p0), TabularPolicy(p1)), SupportError);
  EXPECT_NO_THROW(SurrogateWeightModel(post, TabularPolicy(p0), TabularPolicy(p0)));

  HistoricalDataset dh;
  dh.dim_s = 1;
  const double s[1] = {0.0};
  dh.push_back(0, 1, 0.0, s, 1.0);
  EXPECT_THROW(ips_estimate(dh, TabularPolicy(p1)), SupportError);
}

TEST(Estimators, GaussianPosteriorConcentratesWithSmallNoise) {
  auto c = SyntheticEnvConfig{};
  c.n_users = 100;
  c.n_actions = 10;
  c.sigma_s = 0.05;
  c.n_clusters = 1;  // f is then exactly linear in the encoded (x, a), so the surrogate model is well specified
  const auto env = SyntheticEnv::build(c);
  const auto pi0 = env.make_logging_policy(0.5);
  const auto dh = env.sample_historical(pi0, 3000, 4);
  const auto post = gaussian_bayes_posterior(dh, env.contexts(), pi0, 1e-6);
  const auto test = env.sample_historical(pi0, 200, 5);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Vector p = post(test.users[i], test.short_row(i));
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GE(p.minCoeff(), 0.0);
    if (p(static_cast<Eigen::Index>(test.actions[i])) > 0.9) ++hits;
  }
  EXPECT_GE(hits, 190u);
}

TEST(Features, EncodingsHaveDocumentedLayout) {
  Vector x(2);
  x << 1.0, 2.0;
  const std::vector<double> s{3.0};
  const Vector xs = encode_xs(x, s);
  ASSERT_EQ(xs.size(), 3);
  EXPECT_EQ(xs(2), 3.0);
  EXPECT_EQ(encode_xs(x, s, true).size(), 5);
  EXPECT_EQ(encode_xs(x, s, true)(4), 6.0);
  const Vector xa = encode_xa(x, 1, 3);
  ASSERT_EQ(xa.size(), 5);
  EXPECT_EQ(xa(3), 1.0);
  EXPECT_EQ(xa(2) + xa(4), 0.0);
}

}  // namespace
}  // namespace lope
