#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "lope/models/regressor.hpp"
#include "lope/models/softmax_classifier.hpp"
#include "lope/random.hpp"
#include "lope/types.hpp"

namespace lope {

using RewardModelFn = std::function<double(std::size_t user, std::size_t action, std::span<const double> s)>;
using SurrogateValueFn = std::function<double(std::size_t user, std::span<const double> s)>;
/// Draws s ~ p(s|x,a) into `s`. Only the synthetic harness can provide one.
using SurrogateSampler =
    std::function<void(std::size_t user, std::size_t action, Rng& rng, std::vector<double>& s)>;

/// How m(x,a) = E_{p(s|x,a)}[h_hat(x,a,s)] is obtained.
enum class HbarMode {
  kAuxiliaryFit,   // regress h_hat(x_i,a_i,s_i) on (x_i,a_i) over D_H
  kEnvMonteCarlo,  // average h_hat over draws from the environment
};

/// How pi0(a|x,s) is estimated for the surrogate weights.
enum class WeightModel {
  // pi0(a|x) N(s; f_hat(x,a), sigma_hat^2 I), normalized over a. f_hat is a
  // per-dimension ridge fit on x (+) onehot(a) (+) x (x) onehot(a).
  kGaussianBayes,
  // Softmax classification of logged actions on x (+) s.
  kClassifier,
};

struct NuisanceConfig {
  RegressorConfig regressor;
  SoftmaxClassifierConfig classifier;
  WeightModel weight_model = WeightModel::kGaussianBayes;
  double surrogate_l2 = 1.0;  // ridge penalty of f_hat under kGaussianBayes
  HbarMode hbar_mode = HbarMode::kAuxiliaryFit;
  std::size_t hbar_mc_samples = 100;
  // Blend a nearest-neighbour estimate of pi1(s|x)/pi0(s|x) from D_S into the
  // surrogate weights.
  bool use_short_experiment_for_weights = false;
  std::size_t neighbours = 20;
  double max_weight = std::numeric_limits<double>::infinity();
  // Adds x (x) onehot(a) columns to the q_hat(x,a), h_hat and m(x,a) regressions.
  bool action_interactions = false;
  // Adds x (x) s columns to the q_hat(x,s) and h_hat regressions.
  bool surrogate_interactions = false;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const NuisanceConfig& config);
NuisanceConfig nuisance_config_from_json(const nlohmann::json& j);
std::string to_string(HbarMode mode);
HbarMode hbar_mode_from_string(const std::string& name);
std::string to_string(WeightModel model);
WeightModel weight_model_from_string(const std::string& name);

/// Reward regressions, all fitted on D_H. The two action-value tables are
/// n_users x n_actions over the whole population.
struct RewardModelBundle {
  std::size_t dim_s = 0;
  RewardModelFn h_hat;        // h_hat(x,a,s)
  Matrix h_bar;               // m(x,a)
  Matrix q_hat_xa;            // q_hat(x,a)
  SurrogateValueFn q_hat_xs;  // q_hat(x,s)

  void require_lope() const;
  void require_dr() const;
  void require_lci() const;
};

RewardModelBundle fit_reward_models(const HistoricalDataset& dh, const ContextSet& contexts, std::size_t n_actions,
                                    const NuisanceConfig& config, const SurrogateSampler& sampler = {});

}  // namespace lope
