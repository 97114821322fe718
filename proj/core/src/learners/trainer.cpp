#include "lope/learners/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "lope/error.hpp"
#include "lope/estimators/features.hpp"
#include "lope/estimators/surrogate_weights.hpp"
#include "lope/random.hpp"

namespace lope {

void LearnerConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and non-negative");
  }
}

nlohmann::json to_json(const LearnerConfig& c) {
  return {{"gradient_estimator", to_string(c.gradient_estimator)},
          {"parameterization", to_string(c.parameterization)},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"nuisance", to_json(c.nuisance)},
          {"lope_score", to_string(c.lope_score)}};
}

LearnerConfig learner_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"gradient_estimator", "parameterization", "learning_rate", "epochs",
                                           "batch_size", "seed", "nuisance", "lope_score"};
  if (!j.is_object()) throw ConfigError("learner config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown learner config key '" + key + "'");
  }
  LearnerConfig c;
  try {
    if (j.contains("gradient_estimator")) {
      c.gradient_estimator = gradient_estimator_from_string(j.at("gradient_estimator").get<std::string>());
    }
    if (j.contains("parameterization")) {
      c.parameterization = parameterization_from_string(j.at("parameterization").get<std::string>());
    }
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    if (j.contains("nuisance")) c.nuisance = nuisance_config_from_json(j.at("nuisance"));
    if (j.contains("lope_score")) c.lope_score = lope_score_from_string(j.at("lope_score").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("learner config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainingResult gradient_ascent(SoftmaxPolicyModel model, const PolicyGradientFn& gradient,
                               const PolicyValueFn& value, double learning_rate, std::size_t epochs) {
  TrainingResult result;
  result.value_trace.reserve(epochs);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const Vector g = gradient(model);
    if (!g.allFinite()) throw NumericError("non-finite policy gradient at epoch " + std::to_string(epoch));
    model.set_parameters(model.parameters() + learning_rate * g);
    result.value_trace.push_back(value(model));
  }
  result.model = std::move(model);
  return result;
}

TrainingResult train_policy(const HistoricalDataset& dh, const ContextSet& contexts, const TabularPolicy& logging,
                            const LearnerConfig& config, const SurrogateSampler& sampler) {
  config.validate();
  if (dh.empty()) throw PreconditionError("training needs a non-empty historical dataset");
  const std::size_t n_actions = logging.n_actions();
  const Matrix& X = contexts.features;

  GradientTerms terms;
  switch (config.gradient_estimator) {
    case GradientEstimator::kIpsPg:
      terms = ips_pg_terms(dh, contexts.size(), n_actions);
      break;
    case GradientEstimator::kDrPg: {
      const RewardModelBundle bundle = fit_reward_models(dh, contexts, n_actions, config.nuisance, sampler);
      terms = dr_pg_terms(dh, bundle.q_hat_xa);
      break;
    }
    case GradientEstimator::kLopePg: {
      const RewardModelBundle bundle = fit_reward_models(dh, contexts, n_actions, config.nuisance, sampler);
      const SurrogateWeightModel weights =
          estimate_surrogate_weights(dh, contexts, logging, logging, config.nuisance);
      terms = lope_pg_terms(dh, weights, bundle.h_hat, bundle.h_bar, config.lope_score);
      break;
    }
  }

  SoftmaxPolicyModel init = config.parameterization == PolicyParameterization::kLinear
                                ? SoftmaxPolicyModel::linear(contexts.dim(), n_actions)
                                : SoftmaxPolicyModel::mlp3(contexts.dim(), n_actions,
                                                           derive_seed(config.seed, {kLearnerStream, 0}));
  const PolicyValueFn value = [&](const SoftmaxPolicyModel& m) { return estimated_value(terms, m, X); };

  if (config.batch_size == 0 || config.batch_size >= dh.size()) {
    return gradient_ascent(std::move(init), [&](const SoftmaxPolicyModel& m) { return policy_gradient(terms, m, X); },
                           value, config.learning_rate, config.epochs);
  }

  // Mini-batch: one shuffled pass over D_H per epoch.
  Rng rng = make_rng(derive_seed(config.seed, {kLearnerStream, 1}));
  std::vector<std::size_t> order(dh.size());
  TrainingResult result;
  SoftmaxPolicyModel model = std::move(init);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, order.size() - start);
      const Vector g = policy_gradient(terms, model, X, std::span<const std::size_t>(order.data() + start, len));
      if (!g.allFinite()) throw NumericError("non-finite policy gradient at epoch " + std::to_string(epoch));
      model.set_parameters(model.parameters() + config.learning_rate * g);
    }
    result.value_trace.push_back(value(model));
  }
  result.model = std::move(model);
  return result;
}

TabularPolicy greedy_policy(const Matrix& values) {
  std::vector<std::size_t> chosen(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index x = 0; x < values.rows(); ++x) {
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < values.cols(); ++a) {
      if (values(x, a) > values(x, best)) best = a;
    }
    chosen[static_cast<std::size_t>(x)] = static_cast<std::size_t>(best);
  }
  return TabularPolicy::deterministic(chosen, static_cast<std::size_t>(values.cols()));
}

TabularPolicy reg_based_policy(const HistoricalDataset& dh, const ContextSet& contexts, std::size_t n_actions,
                               const RegressorConfig& config, bool action_interactions, std::uint64_t seed) {
  if (dh.empty()) throw PreconditionError("regression baseline needs a non-empty historical dataset");
  const Vector r = Eigen::Map<const Vector>(dh.long_rewards.data(), static_cast<Eigen::Index>(dh.size()));
  const Regressor q = fit_regressor(design_xa(dh, contexts.features, n_actions, action_interactions), r, config,
                                    derive_seed(seed, {kLearnerStream, 2}));
  const Vector flat = q.predict(design_all_xa(contexts.features, n_actions, action_interactions));
  const Matrix table = Eigen::Map<const RowMatrix>(flat.data(), static_cast<Eigen::Index>(contexts.size()),
                                                   static_cast<Eigen::Index>(n_actions));
  return greedy_policy(table);
}

}  // namespace lope
