#include "lope/types.hpp"

#include <cmath>
#include <sstream>

#include "lope/error.hpp"

namespace lope {

ContextSet ContextSet::uniform(Matrix features) {
  ContextSet set;
  const auto n = features.rows();
  if (n == 0) throw PreconditionError("context set must contain at least one user");
  set.features = std::move(features);
  set.weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
  return set;
}

bool ContextSet::is_uniform() const {
  if (weights.size() == 0) return true;
  const double first = weights(0);
  return (weights.array() == first).all();
}

void ContextSet::validate() const {
  if (weights.size() != features.rows()) {
    throw DimensionError("context weights have " + std::to_string(weights.size()) +
                         " entries for " + std::to_string(features.rows()) + " users");
  }
  if ((weights.array() < 0.0).any()) throw ValidationError("context weights must be non-negative");
  if (std::abs(weights.sum() - 1.0) > 1e-12) {
    throw ValidationError("context weights must sum to one");
  }
  if (!features.allFinite()) throw ValidationError("context features must be finite");
}

void ActionSpace::validate() const {
  if (embeddings.rows() < 2) throw ValidationError("an action space needs at least two actions");
  if (!embeddings.allFinite()) throw ValidationError("action embeddings must be finite");
}

void validate_policy_rows(const Matrix& probs, double tolerance) {
  for (Eigen::Index x = 0; x < probs.rows(); ++x) {
    const auto row = probs.row(x);
    if (!row.allFinite() || (row.array() < 0.0).any()) {
      throw ValidationError("policy row " + std::to_string(x) + " has negative or non-finite entries");
    }
    if (std::abs(row.sum() - 1.0) > tolerance) {
      std::ostringstream msg;
      msg << "policy row " << x << " sums to " << row.sum() << ", expected 1";
      throw ValidationError(msg.str());
    }
  }
}

TabularPolicy::TabularPolicy(Matrix probs) : probs_(std::move(probs)) {
  if (probs_.cols() < 1) throw DimensionError("policy needs at least one action");
  validate_policy_rows(probs_);
}

TabularPolicy TabularPolicy::uniform(std::size_t n_users, std::size_t n_actions) {
  return TabularPolicy(Matrix::Constant(static_cast<Eigen::Index>(n_users),
                                        static_cast<Eigen::Index>(n_actions),
                                        1.0 / static_cast<double>(n_actions)));
}

TabularPolicy TabularPolicy::deterministic(const std::vector<std::size_t>& chosen, std::size_t n_actions) {
  Matrix probs = Matrix::Zero(static_cast<Eigen::Index>(chosen.size()), static_cast<Eigen::Index>(n_actions));
  for (std::size_t x = 0; x < chosen.size(); ++x) {
    if (chosen[x] >= n_actions) throw DimensionError("chosen action out of range");
    probs(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(chosen[x])) = 1.0;
  }
  return TabularPolicy(std::move(probs));
}

TabularPolicy TabularPolicy::mixture(double alpha, const TabularPolicy& a, const TabularPolicy& b) {
  if (a.probs_.rows() != b.probs_.rows() || a.probs_.cols() != b.probs_.cols()) {
    throw DimensionError("mixture of policies with different shapes");
  }
  if (alpha < 0.0 || alpha > 1.0) throw PreconditionError("mixture weight must lie in [0, 1]");
  return TabularPolicy(alpha * a.probs_ + (1.0 - alpha) * b.probs_);
}

HistoricalRecord HistoricalDataset::record(std::size_t i) const {
  return HistoricalRecord{users[i], actions[i], propensities[i], short_row(i), long_rewards[i]};
}

void HistoricalDataset::push_back(std::size_t user, std::size_t action, double propensity,
                                  std::span<const double> s, double r) {
  if (s.size() != dim_s) {
    throw DimensionError("short-term reward has " + std::to_string(s.size()) +
                         " components, dataset expects " + std::to_string(dim_s));
  }
  users.push_back(user);
  actions.push_back(action);
  propensities.push_back(propensity);
  short_rewards.insert(short_rewards.end(), s.begin(), s.end());
  long_rewards.push_back(r);
}

void HistoricalDataset::reserve(std::size_t n) {
  users.reserve(n);
  actions.reserve(n);
  propensities.reserve(n);
  short_rewards.reserve(n * dim_s);
  long_rewards.reserve(n);
}

void HistoricalDataset::validate() const {
  const std::size_t n = users.size();
  if (actions.size() != n || propensities.size() != n || long_rewards.size() != n ||
      short_rewards.size() != n * dim_s) {
    throw DimensionError("historical dataset columns have inconsistent lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(propensities[i] > 0.0) || propensities[i] > 1.0) {
      throw SupportError("record " + std::to_string(i) + " has logging propensity " +
                         std::to_string(propensities[i]) + " outside (0, 1]");
    }
  }
}

void ShortTermDataset::push_back(std::size_t user, std::span<const double> s) {
  if (s.size() != dim_s) throw DimensionError("short-term reward dimension mismatch");
  users.push_back(user);
  short_rewards.insert(short_rewards.end(), s.begin(), s.end());
}

void ShortTermDataset::validate() const {
  if (short_rewards.size() != users.size() * dim_s) {
    throw DimensionError("short-term dataset columns have inconsistent lengths");
  }
}

double kernel_mean(const HistoricalDataset& data, const RecordKernel& kernel) {
  if (data.empty()) throw PreconditionError("estimator called on an empty historical dataset");
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) total += kernel(data.record(i));
  return total / static_cast<double>(data.size());
}

}  // namespace lope
