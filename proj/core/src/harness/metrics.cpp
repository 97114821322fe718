#include "lope/harness/metrics.hpp"

#include <cmath>

#include "lope/error.hpp"

namespace lope {

MetricRow aggregate_metrics(const std::string& estimator, double parameter_value,
                            const std::vector<double>& estimates, const std::vector<double>& truths) {
  if (estimates.size() != truths.size()) throw DimensionError("estimates and truths differ in length");
  MetricRow row;
  row.estimator = estimator;
  row.parameter_value = parameter_value;
  std::vector<double> errors;
  errors.reserve(estimates.size());
  for (std::size_t r = 0; r < estimates.size(); ++r) {
    if (std::isfinite(estimates[r]) && std::isfinite(truths[r])) {
      errors.push_back(estimates[r] - truths[r]);
    } else {
      row.complete = false;
    }
  }
  row.n_replications = errors.size();
  if (errors.empty()) {
    row.mse = row.squared_bias = row.variance = std::nan("");
    return row;
  }
  const double n = static_cast<double>(errors.size());
  double mean = 0.0, second = 0.0;
  for (const double e : errors) {
    mean += e;
    second += e * e;
  }
  mean /= n;
  row.mse = second / n;
  row.squared_bias = mean * mean;
  double var = 0.0;
  for (const double e : errors) var += (e - mean) * (e - mean);
  row.variance = var / n;
  return row;
}

}  // namespace lope
