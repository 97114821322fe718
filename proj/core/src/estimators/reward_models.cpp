#include "lope/estimators/reward_models.hpp"

#include <cmath>
#include <memory>
#include <set>

#include "lope/error.hpp"
#include "lope/estimators/features.hpp"

namespace lope {
namespace {

Matrix as_table(const Vector& flat, std::size_t n_users, std::size_t n_actions) {
  return Eigen::Map<const RowMatrix>(flat.data(), static_cast<Eigen::Index>(n_users),
                                     static_cast<Eigen::Index>(n_actions));
}

Vector long_rewards(const HistoricalDataset& dh) {
  return Eigen::Map<const Vector>(dh.long_rewards.data(), static_cast<Eigen::Index>(dh.size()));
}

}  // namespace

std::string to_string(HbarMode mode) {
  return mode == HbarMode::kAuxiliaryFit ? "auxiliary_fit" : "env_monte_carlo";
}

HbarMode hbar_mode_from_string(const std::string& name) {
  if (name == "auxiliary_fit") return HbarMode::kAuxiliaryFit;
  if (name == "env_monte_carlo") return HbarMode::kEnvMonteCarlo;
  throw ConfigError("unknown hbar_mode '" + name + "' (expected auxiliary_fit or env_monte_carlo)");
}

std::string to_string(WeightModel model) {
  return model == WeightModel::kGaussianBayes ? "gaussian_bayes" : "classifier";
}

WeightModel weight_model_from_string(const std::string& name) {
  if (name == "gaussian_bayes") return WeightModel::kGaussianBayes;
  if (name == "classifier") return WeightModel::kClassifier;
  throw ConfigError("unknown weight_model '" + name + "' (expected gaussian_bayes or classifier)");
}

nlohmann::json to_json(const NuisanceConfig& c) {
  nlohmann::json j{{"regressor", to_json(c.regressor)},
                   {"classifier", to_json(c.classifier)},
                   {"weight_model", to_string(c.weight_model)},
                   {"surrogate_l2", c.surrogate_l2},
                   {"hbar_mode", to_string(c.hbar_mode)},
                   {"hbar_mc_samples", c.hbar_mc_samples},
                   {"use_short_experiment_for_weights", c.use_short_experiment_for_weights},
                   {"neighbours", c.neighbours},
                   {"action_interactions", c.action_interactions},
                   {"surrogate_interactions", c.surrogate_interactions},
                   {"seed", c.seed}};
  // JSON has no infinity; an absent max_weight means no clipping.
  if (std::isfinite(c.max_weight)) j["max_weight"] = c.max_weight;
  return j;
}

NuisanceConfig nuisance_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"regressor",  "classifier",  "weight_model", "surrogate_l2", "hbar_mode",
                                           "hbar_mc_samples", "use_short_experiment_for_weights",
                                           "neighbours", "max_weight", "action_interactions",
                                           "surrogate_interactions", "seed"};
  if (!j.is_object()) throw ConfigError("nuisance config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown nuisance config key '" + key + "'");
  }
  NuisanceConfig c;
  try {
    if (j.contains("regressor")) c.regressor = regressor_config_from_json(j.at("regressor"));
    if (j.contains("classifier")) c.classifier = softmax_config_from_json(j.at("classifier"));
    if (j.contains("weight_model")) c.weight_model = weight_model_from_string(j.at("weight_model").get<std::string>());
    c.surrogate_l2 = j.value("surrogate_l2", c.surrogate_l2);
    if (j.contains("hbar_mode")) c.hbar_mode = hbar_mode_from_string(j.at("hbar_mode").get<std::string>());
    c.hbar_mc_samples = j.value("hbar_mc_samples", c.hbar_mc_samples);
    c.use_short_experiment_for_weights = j.value("use_short_experiment_for_weights", c.use_short_experiment_for_weights);
    c.neighbours = j.value("neighbours", c.neighbours);
    c.max_weight = j.value("max_weight", c.max_weight);
    c.action_interactions = j.value("action_interactions", c.action_interactions);
    c.surrogate_interactions = j.value("surrogate_interactions", c.surrogate_interactions);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("nuisance config: ") + e.what());
  }
  if (c.hbar_mc_samples < 1) throw ConfigError("hbar_mc_samples must be positive");
  if (!(c.surrogate_l2 >= 0.0)) throw ConfigError("surrogate_l2 must be non-negative");
  if (c.neighbours < 1) throw ConfigError("neighbours must be positive");
  if (!(c.max_weight > 0.0)) throw ConfigError("max_weight must be positive");
  return c;
}

void RewardModelBundle::require_lope() const {
  if (!h_hat) throw ConfigError("LOPE needs a fitted h_hat(x,a,s)");
  if (h_bar.size() == 0) throw ConfigError("LOPE needs the m(x,a) table");
}

void RewardModelBundle::require_dr() const {
  if (q_hat_xa.size() == 0) throw ConfigError("DR needs a fitted q_hat(x,a)");
}

void RewardModelBundle::require_lci() const {
  if (!q_hat_xs) throw ConfigError("LCI needs a fitted q_hat(x,s)");
}

RewardModelBundle fit_reward_models(const HistoricalDataset& dh, const ContextSet& contexts, std::size_t n_actions,
                                    const NuisanceConfig& config, const SurrogateSampler& sampler) {
  if (dh.empty()) throw PreconditionError("reward models need a non-empty historical dataset");
  if (config.hbar_mode == HbarMode::kEnvMonteCarlo && !sampler) {
    throw ConfigError("hbar_mode env_monte_carlo needs an environment sampler");
  }
  const auto features = std::make_shared<const Matrix>(contexts.features);
  const std::size_t n_users = contexts.size();
  const Vector r = long_rewards(dh);
  const bool inter = config.action_interactions;
  const bool cross = config.surrogate_interactions;

  RewardModelBundle bundle;
  bundle.dim_s = dh.dim_s;

  const auto q_xs = std::make_shared<const Regressor>(
      fit_regressor(design_xs(dh, *features, cross), r, config.regressor, derive_seed(config.seed, {kNuisanceStream, 0})));
  bundle.q_hat_xs = [features, q_xs, cross](std::size_t user, std::span<const double> s) {
    return q_xs->predict(encode_xs(features->row(static_cast<Eigen::Index>(user)).transpose(), s, cross));
  };

  const Matrix all_xa = design_all_xa(*features, n_actions, inter);
  const Regressor q_xa = fit_regressor(design_xa(dh, *features, n_actions, inter), r, config.regressor,
                                       derive_seed(config.seed, {kNuisanceStream, 1}));
  bundle.q_hat_xa = as_table(q_xa.predict(all_xa), n_users, n_actions);

  const Matrix xas = design_xas(dh, *features, n_actions, inter, cross);
  const auto h = std::make_shared<const Regressor>(
      fit_regressor(xas, r, config.regressor, derive_seed(config.seed, {kNuisanceStream, 2})));
  bundle.h_hat = [features, h, n_actions, inter, cross](std::size_t user, std::size_t action, std::span<const double> s) {
    return h->predict(
        encode_xas(features->row(static_cast<Eigen::Index>(user)).transpose(), action, n_actions, s, inter, cross));
  };

  if (config.hbar_mode == HbarMode::kAuxiliaryFit) {
    const Vector targets = h->predict(xas);
    const Regressor m = fit_regressor(design_xa(dh, *features, n_actions, inter), targets, config.regressor,
                                      derive_seed(config.seed, {kNuisanceStream, 3}));
    bundle.h_bar = as_table(m.predict(all_xa), n_users, n_actions);
  } else {
    const auto M = static_cast<Eigen::Index>(config.hbar_mc_samples);
    bundle.h_bar.resize(static_cast<Eigen::Index>(n_users), static_cast<Eigen::Index>(n_actions));
    std::vector<double> s;
    for (std::size_t u = 0; u < n_users; ++u) {
      const Vector x = features->row(static_cast<Eigen::Index>(u)).transpose();
      for (std::size_t a = 0; a < n_actions; ++a) {
        Rng rng = make_rng(derive_seed(config.seed, {kNuisanceStream, 4, u, a}));
        Matrix batch(M, xas.cols());
        for (Eigen::Index m = 0; m < M; ++m) {
          sampler(u, a, rng, s);
          if (s.size() != dh.dim_s) throw DimensionError("sampler returned the wrong surrogate dimension");
          batch.row(m) = encode_xas(x, a, n_actions, s, inter, cross).transpose();
        }
        bundle.h_bar(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(a)) = h->predict(batch).mean();
      }
    }
  }
  return bundle;
}

}  // namespace lope
