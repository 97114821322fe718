#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lope {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Finite population of contexts x with probabilities p(x).
struct ContextSet {
  Matrix features;  // n_users x dim_x
  Vector weights;   // p(x), sums to one

  static ContextSet uniform(Matrix features);

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  bool is_uniform() const;
  void validate() const;
};

/// Discrete action set with one embedding row per action.
struct ActionSpace {
  Matrix embeddings;  // n_actions x dim_e

  std::size_t size() const { return static_cast<std::size_t>(embeddings.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(embeddings.cols()); }
  void validate() const;
};

/// pi(a|x) for every context of a finite population. Rows are validated as
/// probability distributions on construction.
class TabularPolicy {
 public:
  TabularPolicy() = default;
  explicit TabularPolicy(Matrix probs);

  static TabularPolicy uniform(std::size_t n_users, std::size_t n_actions);
  static TabularPolicy deterministic(const std::vector<std::size_t>& chosen, std::size_t n_actions);
  /// alpha * a + (1 - alpha) * b.
  static TabularPolicy mixture(double alpha, const TabularPolicy& a, const TabularPolicy& b);

  std::size_t n_users() const { return static_cast<std::size_t>(probs_.rows()); }
  std::size_t n_actions() const { return static_cast<std::size_t>(probs_.cols()); }
  double prob(std::size_t user, std::size_t action) const { return probs_(user, action); }
  Vector row(std::size_t user) const { return probs_.row(user).transpose(); }
  const Matrix& probs() const { return probs_; }

 private:
  Matrix probs_;
};

void validate_policy_rows(const Matrix& probs, double tolerance = 1e-10);

/// One logged tuple (x, a, pi0(a|x), s, r). Views into a dataset; also used
/// as the argument of per-record estimator kernels.
struct HistoricalRecord {
  std::size_t user_index = 0;
  std::size_t action = 0;
  double logging_propensity = 1.0;
  std::span<const double> short_rewards;
  double long_reward = 0.0;
};

/// Per-record term of an estimator that is a sample mean of i.i.d. terms.
using RecordKernel = std::function<double(const HistoricalRecord&)>;
using VectorKernel = std::function<Vector(const HistoricalRecord&)>;

/// D_H: logged data from the baseline policy, stored column-wise.
struct HistoricalDataset {
  std::size_t dim_s = 0;
  std::string provenance;
  std::vector<std::size_t> users;
  std::vector<std::size_t> actions;
  std::vector<double> propensities;
  std::vector<double> short_rewards;  // row-major, size() x dim_s
  std::vector<double> long_rewards;

  std::size_t size() const { return users.size(); }
  bool empty() const { return users.empty(); }
  HistoricalRecord record(std::size_t i) const;
  std::span<const double> short_row(std::size_t i) const {
    return {short_rewards.data() + i * dim_s, dim_s};
  }
  void push_back(std::size_t user, std::size_t action, double propensity,
                 std::span<const double> s, double r);
  void reserve(std::size_t n);
  void validate() const;
};

/// D_S: (x, s) pairs collected while the new policy ran for a short period.
struct ShortTermDataset {
  std::size_t dim_s = 0;
  std::vector<std::size_t> users;
  std::vector<double> short_rewards;  // row-major, size() x dim_s

  std::size_t size() const { return users.size(); }
  bool empty() const { return users.empty(); }
  std::span<const double> short_row(std::size_t i) const {
    return {short_rewards.data() + i * dim_s, dim_s};
  }
  void push_back(std::size_t user, std::span<const double> s);
  void validate() const;
};

/// D_E: long-term rewards observed under the new policy (skyline only).
struct LongTermOutcomes {
  std::vector<double> rewards;

  std::size_t size() const { return rewards.size(); }
  bool empty() const { return rewards.empty(); }
};

struct EstimateReport {
  std::string estimator_name;
  double value = 0.0;
  std::map<std::string, double> diagnostics;
};

/// Mean of a kernel over every record, summed in index order.
double kernel_mean(const HistoricalDataset& data, const RecordKernel& kernel);

}  // namespace lope
