#include "lope/estimators/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "lope/error.hpp"

namespace lope {
namespace {

void check_target(const HistoricalDataset& dh, const TabularPolicy& target) {
  if (dh.empty()) throw PreconditionError("estimator called on an empty historical dataset");
  dh.validate();
  for (std::size_t i = 0; i < dh.size(); ++i) {
    if (dh.users[i] >= target.n_users() || dh.actions[i] >= target.n_actions()) {
      throw DimensionError("record " + std::to_string(i) + " lies outside the target policy's table");
    }
  }
}

Vector policy_average(const TabularPolicy& target, const Matrix& table) {
  if (table.rows() != static_cast<Eigen::Index>(target.n_users()) ||
      table.cols() != static_cast<Eigen::Index>(target.n_actions())) {
    throw DimensionError("action-value table does not match the policy shape");
  }
  return target.probs().cwiseProduct(table).rowwise().sum();
}

EstimateReport finish(std::string name, double value, std::size_t n) {
  if (!std::isfinite(value)) throw NumericError(name + " produced a non-finite estimate");
  EstimateReport report{std::move(name), value, {}};
  report.diagnostics["n"] = static_cast<double>(n);
  return report;
}

// Weight summaries shared by the importance-weighted estimators.
void add_weight_diagnostics(EstimateReport& report, const std::vector<double>& w) {
  double sum = 0.0, sum2 = 0.0, max = 0.0;
  for (const double v : w) {
    sum += v;
    sum2 += v * v;
    max = std::max(max, v);
  }
  report.diagnostics["max_weight"] = max;
  report.diagnostics["mean_weight"] = sum / static_cast<double>(w.size());
  report.diagnostics["ess"] = sum2 > 0.0 ? sum * sum / sum2 : 0.0;
}

}  // namespace

RecordKernel ips_kernel(const TabularPolicy& target) {
  auto pi1 = std::make_shared<const TabularPolicy>(target);
  return [pi1](const HistoricalRecord& rec) {
    if (!(rec.logging_propensity > 0.0)) throw SupportError("record has a non-positive logging propensity");
    return pi1->prob(rec.user_index, rec.action) / rec.logging_propensity * rec.long_reward;
  };
}

RecordKernel dr_kernel(const TabularPolicy& target, const Matrix& q_hat_xa) {
  auto pi1 = std::make_shared<const TabularPolicy>(target);
  auto q = std::make_shared<const Matrix>(q_hat_xa);
  auto direct = std::make_shared<const Vector>(policy_average(target, q_hat_xa));
  return [pi1, q, direct](const HistoricalRecord& rec) {
    if (!(rec.logging_propensity > 0.0)) throw SupportError("record has a non-positive logging propensity");
    const auto x = static_cast<Eigen::Index>(rec.user_index);
    const double w = pi1->prob(rec.user_index, rec.action) / rec.logging_propensity;
    return w * (rec.long_reward - (*q)(x, static_cast<Eigen::Index>(rec.action))) + (*direct)(x);
  };
}

RecordKernel lope_kernel(const SurrogateWeightModel& weights, const RewardModelFn& h_hat, const Matrix& h_bar) {
  if (!h_hat) throw ConfigError("LOPE needs a fitted h_hat(x,a,s)");
  auto model = std::make_shared<const SurrogateWeightModel>(weights);
  auto direct = std::make_shared<const Vector>(policy_average(weights.target(), h_bar));
  return [model, h_hat, direct](const HistoricalRecord& rec) {
    const double w = model->weight(rec.user_index, rec.short_rewards);
    return w * (rec.long_reward - h_hat(rec.user_index, rec.action, rec.short_rewards)) +
           (*direct)(static_cast<Eigen::Index>(rec.user_index));
  };
}

EstimateReport avg_estimate(const LongTermOutcomes& outcomes) {
  if (outcomes.empty()) throw PreconditionError("AVG needs a non-empty long-term experiment");
  double sum = 0.0;
  for (const double r : outcomes.rewards) sum += r;
  return finish("avg", sum / static_cast<double>(outcomes.size()), outcomes.size());
}

EstimateReport lci_estimate(const ShortTermDataset& ds, const RewardModelBundle& bundle) {
  bundle.require_lci();
  if (ds.empty()) throw PreconditionError("LCI needs a non-empty short-term experiment");
  if (ds.dim_s != bundle.dim_s) {
    throw DimensionError("short-term data has " + std::to_string(ds.dim_s) + " surrogates, model expects " +
                         std::to_string(bundle.dim_s));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) sum += bundle.q_hat_xs(ds.users[i], ds.short_row(i));
  return finish("lci", sum / static_cast<double>(ds.size()), ds.size());
}

EstimateReport ips_estimate(const HistoricalDataset& dh, const TabularPolicy& target) {
  check_target(dh, target);
  std::vector<double> w(dh.size());
  for (std::size_t i = 0; i < dh.size(); ++i) w[i] = target.prob(dh.users[i], dh.actions[i]) / dh.propensities[i];
  auto report = finish("ips", kernel_mean(dh, ips_kernel(target)), dh.size());
  add_weight_diagnostics(report, w);
  return report;
}

EstimateReport dr_estimate(const HistoricalDataset& dh, const TabularPolicy& target, const Matrix& q_hat_xa) {
  check_target(dh, target);
  if (q_hat_xa.size() == 0) throw ConfigError("DR needs a fitted q_hat(x,a)");
  std::vector<double> w(dh.size());
  for (std::size_t i = 0; i < dh.size(); ++i) w[i] = target.prob(dh.users[i], dh.actions[i]) / dh.propensities[i];
  auto report = finish("dr", kernel_mean(dh, dr_kernel(target, q_hat_xa)), dh.size());
  add_weight_diagnostics(report, w);
  return report;
}

EstimateReport lope_estimate(const HistoricalDataset& dh, const SurrogateWeightModel& weights,
                             const RewardModelBundle& bundle) {
  bundle.require_lope();
  check_target(dh, weights.target());
  if (dh.dim_s != bundle.dim_s) throw DimensionError("historical data and reward model disagree on dim_s");
  std::vector<double> w(dh.size());
  for (std::size_t i = 0; i < dh.size(); ++i) w[i] = weights.weight(dh.users[i], dh.short_row(i));
  auto report = finish("lope", kernel_mean(dh, lope_kernel(weights, bundle.h_hat, bundle.h_bar)), dh.size());
  add_weight_diagnostics(report, w);
  return report;
}

}  // namespace lope
