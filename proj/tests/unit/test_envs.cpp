#include <gtest/gtest.h>

#include <cmath>

#include "lope/envs/synthetic_env.hpp"
#include "lope/envs/tabular_env.hpp"
#include "lope/error.hpp"
#include "lope/policy_value.hpp"

namespace lope {
namespace {

SyntheticEnvConfig small_config(std::uint64_t seed = 1) {
  SyntheticEnvConfig c;
  c.n_users = 60;
  c.n_actions = 8;
  c.seed = seed;
  return c;
}

// Independent re-evaluation of the reward formulas from the raw parameters.
Vector oracle_f(const SyntheticEnv& env, std::size_t u, std::size_t a) {
  const auto& p = env.params();
  const Vector x = env.contexts().features.row(static_cast<Eigen::Index>(u)).transpose();
  const Vector e = env.actions().embeddings.row(static_cast<Eigen::Index>(a)).transpose();
  const auto c = static_cast<Eigen::Index>(p.cluster_of[u]);
  Vector f(static_cast<Eigen::Index>(env.dim_s()));
  for (std::size_t d = 0; d < env.dim_s(); ++d) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      for (Eigen::Index j = 0; j < e.size(); ++j) v += x(i) * p.m_f[d](i, j) * e(j);
    for (Eigen::Index i = 0; i < x.size(); ++i) v += p.theta_f_cluster[d](c, i) * x(i);
    for (Eigen::Index j = 0; j < e.size(); ++j) v += p.theta_f_action[d](static_cast<Eigen::Index>(a), j) * e(j);
    f(static_cast<Eigen::Index>(d)) = v;
  }
  return f;
}

double oracle_q(const SyntheticEnv& env, std::size_t u, std::size_t a) {
  const auto& p = env.params();
  const Vector x = env.contexts().features.row(static_cast<Eigen::Index>(u)).transpose();
  const Vector e = env.actions().embeddings.row(static_cast<Eigen::Index>(a)).transpose();
  const auto c = static_cast<Eigen::Index>(p.cluster_of[u]);
  const Vector f = oracle_f(env, u, a);
  double g = 0.0;
  for (Eigen::Index d = 0; d < f.size(); ++d) g += p.theta_g(c, d) * f(d);
  double h = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (Eigen::Index j = 0; j < e.size(); ++j) h += x(i) * p.m_h(i, j) * e(j);
  for (Eigen::Index i = 0; i < x.size(); ++i) h += p.theta_h_cluster(c, i) * x(i);
  for (Eigen::Index j = 0; j < e.size(); ++j) h += p.theta_h_action(static_cast<Eigen::Index>(a), j) * e(j);
  const double lambda = env.config().lambda;
  return (1 - lambda) * g + lambda * h;
}

TEST(SyntheticEnv, ConfigValidation) {
  auto c = small_config();
  c.lambda = 1.5;
  EXPECT_THROW(SyntheticEnv::build(c), ValidationError);
  c = small_config();
  c.n_clusters = c.n_users + 1;
  EXPECT_THROW(SyntheticEnv::build(c), ValidationError);
  c = small_config();
  c.sigma_s = -1;
  EXPECT_THROW(SyntheticEnv::build(c), ValidationError);
  EXPECT_THROW(synthetic_config_from_json({{"lamda", 0.3}}), ValidationError);
}

TEST(SyntheticEnv, ConfigJsonRoundTrip) {
  auto c = small_config(99);
  c.lambda = 0.3;
  c.reward_uses_realized_s = false;
  const auto back = synthetic_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(SyntheticEnv, SameSeedSameParameters) {
  const auto a = SyntheticEnv::build(small_config(5));
  const auto b = SyntheticEnv::build(small_config(5));
  EXPECT_EQ(a.q_table(), b.q_table());
  EXPECT_EQ(a.contexts().features, b.contexts().features);
  EXPECT_EQ(a.params().cluster_of, b.params().cluster_of);
  EXPECT_NE(a.q_table(), SyntheticEnv::build(small_config(6)).q_table());
}

TEST(SyntheticEnv, SingleClusterSharesOneSurrogateMap) {
  auto c = small_config();
  c.n_clusters = 1;
  const auto env = SyntheticEnv::build(c);
  for (const auto k : env.params().cluster_of) EXPECT_EQ(k, 0u);
  const std::vector<double> s{0.3, -1.0, 2.0};
  const double g0 = env.surrogate_effect(0, s);
  for (std::size_t u = 1; u < env.n_users(); ++u) EXPECT_DOUBLE_EQ(env.surrogate_effect(u, s), g0);
}

TEST(SyntheticEnv, ParametersAreUniformOnUnitInterval) {
  double sum = 0.0;
  std::size_t count = 0;
  auto visit = [&](const Matrix& m) {
    EXPECT_LE(m.cwiseAbs().maxCoeff(), 1.0);
    sum += m.sum();
    count += static_cast<std::size_t>(m.size());
  };
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto c = small_config(seed);
    c.n_users = 20;
    const auto env = SyntheticEnv::build(c);
    const auto& p = env.params();
    for (const auto& m : p.m_f) visit(m);
    for (const auto& m : p.theta_f_cluster) visit(m);
    for (const auto& m : p.theta_f_action) visit(m);
    visit(p.m_h);
    visit(p.theta_g);
    visit(p.theta_h_cluster);
    visit(p.theta_h_action);
    for (const auto k : p.cluster_of) EXPECT_LT(k, c.n_clusters);
  }
  EXPECT_NEAR(sum / static_cast<double>(count), 0.0, 0.05);
}

TEST(SyntheticEnv, ExpectedShortAndLongMatchOracleFormula) {
  const auto env = SyntheticEnv::build(SyntheticEnvConfig{});
  for (std::size_t u = 0; u < env.n_users(); u += 37) {
    for (std::size_t a = 0; a < env.n_actions(); a += 3) {
      EXPECT_LE((env.expected_short(u, a) - oracle_f(env, u, a)).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_NEAR(env.expected_long(u, a), oracle_q(env, u, a), 1e-12);
      EXPECT_NEAR(env.q_table()(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(a)), oracle_q(env, u, a),
                  1e-12);
    }
  }
}

TEST(SyntheticEnv, LambdaEndpointsAndLinearity) {
  auto c = small_config(8);
  c.lambda = 0.0;
  const auto e0 = SyntheticEnv::build(c);
  c.lambda = 1.0;
  const auto e1 = SyntheticEnv::build(c);
  c.lambda = 0.3;
  const auto e3 = SyntheticEnv::build(c);
  for (std::size_t u = 0; u < e0.n_users(); ++u) {
    for (std::size_t a = 0; a < e0.n_actions(); ++a) {
      const Vector f = e0.expected_short(u, a);
      const std::vector<double> fs(f.data(), f.data() + f.size());
      EXPECT_NEAR(e0.expected_long(u, a), e0.surrogate_effect(u, fs), 1e-12);
      EXPECT_NEAR(e1.expected_long(u, a), e1.action_effect(u, a), 1e-12);
      EXPECT_NEAR(e3.expected_long(u, a), 0.7 * e0.expected_long(u, a) + 0.3 * e1.expected_long(u, a), 1e-10);
    }
  }
}

TEST(SyntheticEnv, LoggingPolicyIsSoftmaxOfQ) {
  const auto env = SyntheticEnv::build(small_config(9));
  const auto uni = env.make_logging_policy(0.0);
  EXPECT_LT((uni.probs().array() - 1.0 / 8).abs().maxCoeff(), 1e-15);
  const auto sharp = env.make_logging_policy(1e3);
  const auto pi = env.make_logging_policy(0.5);
  for (std::size_t u = 0; u < env.n_users(); ++u) {
    Eigen::Index best;
    env.q_table().row(static_cast<Eigen::Index>(u)).maxCoeff(&best);
    EXPECT_GE(sharp.prob(u, static_cast<std::size_t>(best)), 0.999);
    double z = 0.0;
    for (std::size_t a = 0; a < env.n_actions(); ++a) z += std::exp(0.5 * env.expected_long(u, a));
    for (std::size_t a = 0; a < env.n_actions(); ++a) {
      EXPECT_NEAR(pi.prob(u, a), std::exp(0.5 * env.expected_long(u, a)) / z, 1e-12);
    }
    EXPECT_NEAR(pi.row(u).sum(), 1.0, 1e-12);
  }
}

TEST(SyntheticEnv, TargetPolicyIsEpsilonGreedy) {
  const auto env = SyntheticEnv::build(small_config(10));
  const auto uni = env.make_target_policy(1.0);
  EXPECT_LT((uni.probs().array() - 1.0 / 8).abs().maxCoeff(), 1e-15);
  const auto greedy = env.make_target_policy(0.0);
  const auto pi = env.make_target_policy(0.1);
  for (std::size_t u = 0; u < env.n_users(); ++u) {
    Eigen::Index best;
    env.q_table().row(static_cast<Eigen::Index>(u)).maxCoeff(&best);
    EXPECT_DOUBLE_EQ(greedy.prob(u, static_cast<std::size_t>(best)), 1.0);
    for (std::size_t a = 0; a < env.n_actions(); ++a) {
      if (a == static_cast<std::size_t>(best)) continue;
      EXPECT_DOUBLE_EQ(pi.prob(u, a), 0.1 / 8);
    }
    EXPECT_NEAR(pi.row(u).sum(), 1.0, 1e-12);
  }
}

TEST(SyntheticEnv, TargetPolicyTiesGoToLowestIndex) {
  Matrix q(1, 3);
  q << 1.0, 2.0, 2.0;
  EXPECT_DOUBLE_EQ(epsilon_greedy_policy(q, 0.0).prob(0, 1), 1.0);
}

TEST(SyntheticEnv, NoiselessSamplesHitExpectedReward) {
  auto c = small_config(11);
  c.sigma_s = 0.0;
  c.sigma_r = 0.0;
  c.lambda = 0.0;
  const auto env = SyntheticEnv::build(c);
  const auto dh = env.sample_historical(env.make_logging_policy(0.5), 500, 1);
  for (std::size_t i = 0; i < dh.size(); ++i) {
    EXPECT_NEAR(dh.long_rewards[i], env.expected_long(dh.users[i], dh.actions[i]), 1e-10);
    EXPECT_NEAR(dh.propensities[i], env.make_logging_policy(0.5).prob(dh.users[i], dh.actions[i]), 0.0);
  }
}

TEST(SyntheticEnv, SampleMeansMatchExactValues) {
  const auto env = SyntheticEnv::build(small_config(12));
  const auto pi0 = env.make_logging_policy(0.5);
  const auto pi1 = env.make_target_policy(0.1);
  const std::size_t n = 200000;
  auto check = [](const std::vector<double>& xs, double target) {
    double m = 0.0, m2 = 0.0;
    for (const double v : xs) {
      m += v;
      m2 += v * v;
    }
    m /= static_cast<double>(xs.size());
    const double se = std::sqrt((m2 / static_cast<double>(xs.size()) - m * m) / static_cast<double>(xs.size()));
    EXPECT_NEAR(m, target, 3 * se);
  };
  const auto& w = env.contexts().weights;
  check(env.sample_historical(pi0, n, 2).long_rewards, policy_value_exact(pi0, env.q_table(), w));
  check(env.sample_long_experiment(pi1, n, 3).rewards, policy_value_exact(pi1, env.q_table(), w));

  // Mean of the first surrogate dimension under pi1.
  const auto ds = env.sample_short_experiment(pi1, n, 4);
  std::vector<double> s0(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) s0[i] = ds.short_row(i)[0];
  double exact = 0.0;
  for (std::size_t u = 0; u < env.n_users(); ++u)
    for (std::size_t a = 0; a < env.n_actions(); ++a)
      exact += w(static_cast<Eigen::Index>(u)) * pi1.prob(u, a) * env.expected_short(u, a)(0);
  check(s0, exact);
}

TEST(SyntheticEnv, SamplingIsDeterministic) {
  const auto env = SyntheticEnv::build(small_config(13));
  const auto pi0 = env.make_logging_policy(0.5);
  const auto a = env.sample_historical(pi0, 100, 77);
  const auto b = env.sample_historical(pi0, 100, 77);
  EXPECT_EQ(a.long_rewards, b.long_rewards);
  EXPECT_EQ(a.short_rewards, b.short_rewards);
  EXPECT_EQ(env.sample_short_experiment(pi0, 50, 1).short_rewards,
            env.sample_short_experiment(pi0, 50, 1).short_rewards);
}

TabularEnv hand_env() {
  // 2 contexts, 3 actions, 2 surrogates.
  Vector px(2);
  px << 0.4, 0.6;
  std::vector<double> ps{0.9, 0.1, 0.5, 0.5, 0.2, 0.8,   // x = 0
                         0.3, 0.7, 0.6, 0.4, 1.0, 0.0};  // x = 1
  std::vector<double> q(12), var(12, 0.0);
  for (std::size_t i = 0; i < 12; ++i) q[i] = 0.1 * static_cast<double>(i);
  return TabularEnv(px, 3, 2, ps, q, var);
}

TEST(TabularEnv, RejectsTablesThatAreNotDistributions) {
  Vector px(1);
  px << 1.0;
  EXPECT_THROW(TabularEnv(px, 1, 2, {0.6, 0.6}, {0, 0}, {0, 0}), ValidationError);
  px << 0.9;
  EXPECT_THROW(TabularEnv(px, 1, 2, {0.5, 0.5}, {0, 0}, {0, 0}), ValidationError);
}

TEST(TabularEnv, MarginalSurrogateMatchesBruteForce) {
  const auto env = hand_env();
  Matrix p(2, 3);
  p << 0.2, 0.3, 0.5, 0.6, 0.1, 0.3;
  const TabularPolicy pi(p);
  // Hand sums: x=0 -> s0 = .2*.9 + .3*.5 + .5*.2 = .43; x=1 -> s0 = .6*.3 + .1*.6 + .3*1 = .54.
  EXPECT_NEAR(tabular_marginal_surrogate(env, pi, 0)(0), 0.43, 1e-15);
  EXPECT_NEAR(tabular_marginal_surrogate(env, pi, 0)(1), 0.57, 1e-15);
  EXPECT_NEAR(tabular_marginal_surrogate(env, pi, 1)(0), 0.54, 1e-15);
  const auto det = TabularPolicy::deterministic({1, 2}, 3);
  EXPECT_NEAR(tabular_marginal_surrogate(env, det, 0)(0), 0.5, 1e-15);
  EXPECT_NEAR(tabular_marginal_surrogate(env, det, 1)(1), 0.0, 1e-15);
}

TEST(TabularEnv, ActionIndependentSurrogatesGiveCommonMarginal) {
  TabularEnvOptions opt;
  opt.action_independent_surrogates = true;
  const auto env = random_tabular_env(3, opt);
  const auto pa = random_tabular_policy(4, opt.n_contexts, opt.n_actions);
  const auto pb = random_tabular_policy(5, opt.n_contexts, opt.n_actions);
  for (std::size_t x = 0; x < opt.n_contexts; ++x) {
    EXPECT_LT((tabular_marginal_surrogate(env, pa, x) - tabular_marginal_surrogate(env, pb, x)).norm(), 1e-14);
    for (std::size_t s = 0; s < opt.n_surrogates; ++s) EXPECT_NEAR(env.surrogate_weight(pa, pb, x, s), 1.0, 1e-14);
  }
  const auto id = tabular_weight_variance_identity(env, pa, pb);
  EXPECT_LT(id.gap(), 1e-12);
}

TEST(TabularEnv, WeightVarianceIdentity) {
  TabularEnvOptions opt;
  opt.n_contexts = 3;
  opt.n_actions = 4;
  opt.n_surrogates = 3;
  for (std::uint64_t k = 0; k < 10; ++k) {
    const auto env = random_tabular_env(100 + k, opt);
    const auto pi0 = random_tabular_policy(200 + k, 3, 4);
    const auto pi1 = random_tabular_policy(300 + k, 3, 4);
    const auto id = tabular_weight_variance_identity(env, pi0, pi1);
    EXPECT_LE(id.gap(), 1e-12);
    EXPECT_GE(id.lhs, -1e-12);
    const auto same = tabular_weight_variance_identity(env, pi0, pi0);
    EXPECT_LE(std::abs(same.lhs), 1e-12);
    EXPECT_LE(std::abs(same.rhs), 1e-12);
  }
}

TEST(TabularEnv, ExactExpectationOfConstantKernel) {
  const auto env = random_tabular_env(7);
  const auto pi0 = random_tabular_policy(8, 3, 4);
  EXPECT_NEAR(tabular_exact_estimator_expectation(env, pi0, [](const HistoricalRecord&) { return 2.5; }), 2.5,
              1e-14);
}

TEST(TabularEnv, NonFiniteKernelNamesTheTuple) {
  const auto env = random_tabular_env(7);
  const auto pi0 = random_tabular_policy(8, 3, 4);
  try {
    tabular_exact_estimator_expectation(env, pi0, [](const HistoricalRecord& r) {
      return r.action == 2 ? std::nan("") : 0.0;
    });
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("a=2"), std::string::npos) << e.what();
  }
}

TEST(TabularEnv, SamplingMatchesEnumeration) {
  const auto env = random_tabular_env(9);
  const auto pi0 = random_tabular_policy(10, 3, 4);
  const auto dh = env.sample_historical(pi0, 200000, 11);
  double m = 0.0, m2 = 0.0;
  for (const double r : dh.long_rewards) {
    m += r;
    m2 += r * r;
  }
  m /= 200000.0;
  const double se = std::sqrt((m2 / 200000.0 - m * m) / 200000.0);
  EXPECT_NEAR(m, env.value(pi0), 3 * se);
}

}  // namespace
}  // namespace lope
