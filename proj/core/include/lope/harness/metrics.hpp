#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lope {

/// MSE split for one estimator in one sweep cell. Errors are taken against the
/// replication's own ground truth, so the split stays exact when the
/// environment is redrawn per replication.
struct MetricRow {
  std::string estimator;
  double parameter_value = 0.0;
  double mse = 0.0;
  double squared_bias = 0.0;
  double variance = 0.0;
  std::size_t n_replications = 0;  // replications that produced a value
  bool complete = true;
};

/// Non-finite estimates mark failed replications: they are skipped and the
/// row is flagged incomplete.
MetricRow aggregate_metrics(const std::string& estimator, double parameter_value,
                            const std::vector<double>& estimates, const std::vector<double>& truths);

}  // namespace lope
