#pragma once

#include "lope/estimators/reward_models.hpp"
#include "lope/estimators/surrogate_weights.hpp"
#include "lope/types.hpp"

namespace lope {

// Per-record terms. Each estimator below is the mean of its kernel over D_H;
// the tabular oracle takes exact expectations of the same kernels.
RecordKernel ips_kernel(const TabularPolicy& target);
/// w(x,a) (r - q_hat(x,a)) + sum_a' pi1(a'|x) q_hat(x,a').
RecordKernel dr_kernel(const TabularPolicy& target, const Matrix& q_hat_xa);
/// w(x,s) (r - h_hat(x,a,s)) + sum_a pi1(a|x) m(x,a), target taken from the weight model.
RecordKernel lope_kernel(const SurrogateWeightModel& weights, const RewardModelFn& h_hat, const Matrix& h_bar);

EstimateReport avg_estimate(const LongTermOutcomes& outcomes);
EstimateReport lci_estimate(const ShortTermDataset& ds, const RewardModelBundle& bundle);
EstimateReport ips_estimate(const HistoricalDataset& dh, const TabularPolicy& target);
EstimateReport dr_estimate(const HistoricalDataset& dh, const TabularPolicy& target, const Matrix& q_hat_xa);
EstimateReport lope_estimate(const HistoricalDataset& dh, const SurrogateWeightModel& weights,
                             const RewardModelBundle& bundle);

}  // namespace lope
