#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "lope/random.hpp"
#include "lope/types.hpp"

namespace lope {

struct SyntheticEnvConfig {
  std::size_t n_users = 1000;
  std::size_t dim_x = 10;
  std::size_t n_actions = 30;
  std::size_t dim_e = 5;
  std::size_t dim_s = 3;
  std::size_t n_clusters = 3;
  double lambda = 0.5;   // surrogacy violation: 0 = surrogacy holds, 1 = s carries no reward signal
  double beta = 0.5;     // logging softmax inverse temperature
  double epsilon = 0.1;  // target policy exploration
  double sigma_r = 0.5;
  double sigma_s = 0.5;
  // Realized r uses the realized noisy s inside g; false uses the noiseless f(x,a).
  bool reward_uses_realized_s = true;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const SyntheticEnvConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
SyntheticEnvConfig synthetic_config_from_json(const nlohmann::json& j);

/// Reward-function parameters. Per surrogate dimension d, f_d uses
/// m_f[d], theta_f_cluster[d] and theta_f_action[d].
struct SyntheticEnvParams {
  std::vector<Matrix> m_f;              // dim_s of dim_x x dim_e
  Matrix m_h;                           // dim_x x dim_e
  Matrix theta_g;                       // n_clusters x dim_s
  std::vector<Matrix> theta_f_cluster;  // dim_s of n_clusters x dim_x
  std::vector<Matrix> theta_f_action;   // dim_s of n_actions x dim_e
  Matrix theta_h_cluster;               // n_clusters x dim_x
  Matrix theta_h_action;                // n_actions x dim_e
  std::vector<std::size_t> cluster_of;  // n_users
};

/// Finite-population synthetic environment:
///   f_d(x,a) = x' M_f^d e_a + theta_{f,c(x)}^d . x + theta_{f,a}^d . e_a
///   g(x,s)   = theta_{g,c(x)} . s
///   h(x,a)   = x' M_h e_a + theta_{h,c(x)} . x + theta_{h,a} . e_a
///   q(x,a)   = (1 - lambda) g(x, f(x,a)) + lambda h(x,a)
/// Immutable after construction; expected rewards are tabulated up front.
class SyntheticEnv {
 public:
  /// Draws features and embeddings from N(0,1), every parameter from U[-1,1],
  /// and clusters users with KMeans. Deterministic given config.seed.
  static SyntheticEnv build(const SyntheticEnvConfig& config);

  SyntheticEnv(SyntheticEnvConfig config, ContextSet contexts, ActionSpace actions, SyntheticEnvParams params);

  const SyntheticEnvConfig& config() const { return config_; }
  const ContextSet& contexts() const { return contexts_; }
  const ActionSpace& actions() const { return actions_; }
  const SyntheticEnvParams& params() const { return params_; }
  std::size_t n_users() const { return contexts_.size(); }
  std::size_t n_actions() const { return actions_.size(); }
  std::size_t dim_s() const { return config_.dim_s; }

  Vector expected_short(std::size_t user, std::size_t action) const;
  double surrogate_effect(std::size_t user, std::span<const double> s) const;
  double action_effect(std::size_t user, std::size_t action) const;
  double expected_long(std::size_t user, std::size_t action) const;
  /// q(x,a) for the whole population, n_users x n_actions.
  const Matrix& q_table() const { return q_table_; }

  TabularPolicy make_logging_policy(double beta) const;
  TabularPolicy make_target_policy(double epsilon) const;

  /// Draws s ~ N(f(x,a), sigma_s^2 I).
  Vector sample_short(std::size_t user, std::size_t action, Rng& rng) const;

  HistoricalDataset sample_historical(const TabularPolicy& logging, std::size_t n, std::uint64_t seed) const;
  ShortTermDataset sample_short_experiment(const TabularPolicy& target, std::size_t n, std::uint64_t seed) const;
  LongTermOutcomes sample_long_experiment(const TabularPolicy& target, std::size_t n, std::uint64_t seed) const;

  /// Long-format CSV (tensor,i,j,k,value) of every parameter, features and
  /// embeddings included.
  void write_parameters_csv(const std::filesystem::path& path) const;

 private:
  void check_indices(std::size_t user, std::size_t action) const;
  void check_policy(const TabularPolicy& policy) const;
  std::size_t draw_user(Rng& rng) const;
  // Draws s and r for a fixed (x, a); returns r and writes s into `s`.
  double draw_outcome(std::size_t user, std::size_t action, Rng& rng, std::vector<double>& s) const;

  SyntheticEnvConfig config_;
  ContextSet contexts_;
  ActionSpace actions_;
  SyntheticEnvParams params_;
  std::vector<Matrix> f_table_;  // dim_s of n_users x n_actions
  Matrix h_table_;
  Matrix q_table_;
};

/// Softmax of beta * q per row with max subtraction.
TabularPolicy softmax_policy(const Matrix& q_table, double beta);
/// (1 - eps) on argmax_a q (lowest index on ties) plus eps / |A| everywhere.
TabularPolicy epsilon_greedy_policy(const Matrix& q_table, double epsilon);

}  // namespace lope
