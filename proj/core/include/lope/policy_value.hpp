#pragma once

#include "lope/types.hpp"

namespace lope {

/// V(pi) = sum_x p(x) sum_a pi(a|x) q(x,a), exact over a finite population.
double policy_value_exact(const TabularPolicy& policy, const Matrix& q_table, const Vector& weights);

/// Mean long-term reward of D_H; an unbiased estimate of the logging
/// policy's value because D_H was collected on-policy for pi0.
double on_policy_value(const HistoricalDataset& dataset);

}  // namespace lope
