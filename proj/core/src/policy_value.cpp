#include "lope/policy_value.hpp"

#include "lope/error.hpp"

namespace lope {

double policy_value_exact(const TabularPolicy& policy, const Matrix& q_table, const Vector& weights) {
  const Matrix& probs = policy.probs();
  if (probs.rows() != q_table.rows() || probs.cols() != q_table.cols()) {
    throw DimensionError("policy is " + std::to_string(probs.rows()) + "x" + std::to_string(probs.cols()) +
                         " but q table is " + std::to_string(q_table.rows()) + "x" +
                         std::to_string(q_table.cols()));
  }
  if (weights.size() != probs.rows()) throw DimensionError("context weights do not match policy rows");
  if (!q_table.allFinite()) throw ValidationError("q table has non-finite entries");
  const Vector per_user = probs.cwiseProduct(q_table).rowwise().sum();
  return weights.dot(per_user);
}

double on_policy_value(const HistoricalDataset& dataset) {
  if (dataset.empty()) throw PreconditionError("on-policy value of an empty dataset");
  double total = 0.0;
  for (const double r : dataset.long_rewards) total += r;
  return total / static_cast<double>(dataset.size());
}

}  // namespace lope
