#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>

#include "lope/estimators/reward_models.hpp"
#include "lope/types.hpp"

namespace lope {

/// pi0(.|x,s) as a probability vector over actions.
using ConditionalFn = std::function<Vector(std::size_t user, std::span<const double> s)>;
/// Direct estimate of pi1(s|x) / pi0(s|x).
using DensityRatioFn = std::function<double(std::size_t user, std::span<const double> s)>;

/// w(x,s) = sum_a pi0(a|x,s) pi1(a|x) / pi0(a|x), with pi0(a|x,s) either fitted
/// or supplied exactly.
class SurrogateWeightModel {
 public:
  SurrogateWeightModel(ConditionalFn posterior, TabularPolicy logging, TabularPolicy target,
                       double max_weight = std::numeric_limits<double>::infinity());

  /// Surrogate weight for the model's own target policy.
  double weight(std::size_t user, std::span<const double> s) const;
  /// Same classifier, any target row pi(.|x). No D_S blending and no clipping.
  double weight_for(std::size_t user, std::span<const double> s, const Eigen::Ref<const Vector>& target_row) const;
  Vector logging_posterior(std::size_t user, std::span<const double> s) const;
  double vanilla_weight(std::size_t user, std::size_t action) const;

  /// Averages the Bayes-rule weight with an independent ratio estimate.
  void set_blend(DensityRatioFn ratio) { blend_ = std::move(ratio); }
  bool blended() const { return static_cast<bool>(blend_); }

  /// Copy pointing at another target policy; any blend is dropped because it
  /// was estimated for the old target.
  SurrogateWeightModel retarget(TabularPolicy target) const;

  const TabularPolicy& logging() const { return *logging_; }
  const TabularPolicy& target() const { return *target_; }
  double max_weight() const { return max_weight_; }

 private:
  ConditionalFn posterior_;
  std::shared_ptr<const TabularPolicy> logging_;
  std::shared_ptr<const TabularPolicy> target_;
  double max_weight_;
  DensityRatioFn blend_;
};

/// Estimates pi0(a|x,s) with config.weight_model and wraps it into weights.
/// With config.use_short_experiment_for_weights and a non-null D_S, blends in
/// a k-nearest-neighbour ratio of D_S to D_H densities over x (+) s.
SurrogateWeightModel estimate_surrogate_weights(const HistoricalDataset& dh, const ContextSet& contexts,
                                                const TabularPolicy& target, const TabularPolicy& logging,
                                                const NuisanceConfig& config,
                                                const ShortTermDataset* ds = nullptr);

/// Softmax classification of logged actions on x (+) s.
ConditionalFn classifier_posterior(const HistoricalDataset& dh, const ContextSet& contexts, std::size_t n_actions,
                                   const SoftmaxClassifierConfig& config);

/// Bayes rule with the known logging policy and a Gaussian surrogate model:
/// pi0(a|x,s) proportional to pi0(a|x) N(s; f_hat(x,a), sigma_hat^2 I).
ConditionalFn gaussian_bayes_posterior(const HistoricalDataset& dh, const ContextSet& contexts,
                                       const TabularPolicy& logging, double l2);

/// k-nearest-neighbour estimate of p_S(z) / p_H(z) over z = x (+) s, using
/// D_H standardization and add-one smoothing of the neighbour counts.
DensityRatioFn knn_density_ratio(const HistoricalDataset& dh, const ShortTermDataset& ds, const Matrix& features,
                                 std::size_t k);

}  // namespace lope
