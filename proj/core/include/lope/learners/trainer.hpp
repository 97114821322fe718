#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "lope/estimators/reward_models.hpp"
#include "lope/learners/gradients.hpp"
#include "lope/learners/policy_model.hpp"
#include "lope/types.hpp"

namespace lope {

struct LearnerConfig {
  GradientEstimator gradient_estimator = GradientEstimator::kLopePg;
  PolicyParameterization parameterization = PolicyParameterization::kLinear;
  double learning_rate = 0.05;
  std::size_t epochs = 200;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  NuisanceConfig nuisance;
  LopeScore lope_score = LopeScore::kMarginal;

  void validate() const;
};

nlohmann::json to_json(const LearnerConfig& config);
LearnerConfig learner_config_from_json(const nlohmann::json& j);

struct TrainingResult {
  SoftmaxPolicyModel model;
  std::vector<double> value_trace;  // value after each epoch
};

using PolicyGradientFn = std::function<Vector(const SoftmaxPolicyModel&)>;
using PolicyValueFn = std::function<double(const SoftmaxPolicyModel&)>;

/// theta <- theta + lr * gradient(theta), recording value(theta) after every
/// step. Throws NumericError naming the epoch on a non-finite gradient.
TrainingResult gradient_ascent(SoftmaxPolicyModel model, const PolicyGradientFn& gradient,
                               const PolicyValueFn& value, double learning_rate, std::size_t epochs);

/// Fits the nuisances once on D_H, then runs gradient ascent from the
/// uniform policy. The trace holds the matching estimator's value of each
/// iterate. The logging policy is needed by LOPE-PG for pi0(a|x) over all a.
TrainingResult train_policy(const HistoricalDataset& dh, const ContextSet& contexts, const TabularPolicy& logging,
                            const LearnerConfig& config, const SurrogateSampler& sampler = {});

/// Greedy policy on a q_hat(x,a) fitted to D_H; ties go to the lowest action.
TabularPolicy reg_based_policy(const HistoricalDataset& dh, const ContextSet& contexts, std::size_t n_actions,
                               const RegressorConfig& config, bool action_interactions = false,
                               std::uint64_t seed = 0);

/// Row-wise argmax with lowest-index ties, as a deterministic policy.
TabularPolicy greedy_policy(const Matrix& values);

}  // namespace lope
