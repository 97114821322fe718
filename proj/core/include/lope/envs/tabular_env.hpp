#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "lope/types.hpp"

namespace lope {

/// Fully enumerable environment with a discrete surrogate set. The long-term
/// reward given (x,a,s) takes the two values q(x,a,s) +- sqrt(var(x,a,s)) with
/// probability 1/2 each, so every expectation is a finite sum.
///
/// In logged records the surrogate s is one-hot encoded (dim_s = n_surrogates)
/// and contexts are one-hot features.
class TabularEnv {
 public:
  TabularEnv(Vector p_x, std::size_t n_actions, std::size_t n_surrogates, std::vector<double> p_s_given_xa,
             std::vector<double> q_xas, std::vector<double> noise_var);

  std::size_t n_contexts() const { return static_cast<std::size_t>(p_x_.size()); }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t n_surrogates() const { return n_surrogates_; }
  const Vector& p_x() const { return p_x_; }

  double p_s(std::size_t x, std::size_t a, std::size_t s) const { return p_s_[index(x, a, s)]; }
  double q(std::size_t x, std::size_t a, std::size_t s) const { return q_[index(x, a, s)]; }
  double noise_var(std::size_t x, std::size_t a, std::size_t s) const { return noise_var_[index(x, a, s)]; }

  /// q(x,a) = sum_s p(s|x,a) q(x,a,s).
  Matrix q_table() const;
  /// V[r | x, a], including the spread of q(x,a,s) over s.
  Matrix reward_variance_table() const;
  double value(const TabularPolicy& policy) const;

  /// pi(s|x) = sum_a pi(a|x) p(s|x,a).
  Vector marginal_surrogate(const TabularPolicy& policy, std::size_t x) const;
  /// pi0(a|x,s) = pi0(a|x) p(s|x,a) / pi0(s|x).
  Vector logging_posterior(const TabularPolicy& logging, std::size_t x, std::size_t s) const;
  /// pi1(s|x) / pi0(s|x).
  double surrogate_weight(const TabularPolicy& logging, const TabularPolicy& target, std::size_t x,
                          std::size_t s) const;

  ContextSet contexts() const;
  std::vector<double> encode_surrogate(std::size_t s) const;
  /// Index of the hot entry of a one-hot surrogate vector.
  std::size_t decode_surrogate(std::span<const double> s) const;

  /// Calls visit(record, probability) for every (x, a, s, r) outcome with
  /// positive probability under p(x) policy(a|x) p(s|x,a) p(r|x,a,s).
  void for_each_outcome(const TabularPolicy& policy,
                        const std::function<void(const HistoricalRecord&, double)>& visit) const;

  HistoricalDataset sample_historical(const TabularPolicy& logging, std::size_t n, std::uint64_t seed) const;

 private:
  std::size_t index(std::size_t x, std::size_t a, std::size_t s) const {
    return (x * n_actions_ + a) * n_surrogates_ + s;
  }
  void check_policy(const TabularPolicy& policy) const;

  Vector p_x_;
  std::size_t n_actions_;
  std::size_t n_surrogates_;
  std::vector<double> p_s_;
  std::vector<double> q_;
  std::vector<double> noise_var_;
};

enum class TabularRewardStructure {
  kGeneral,    // q(x,a,s) depends on the action directly
  kSurrogacy,  // q(x,a,s) = q(x,s)
};

struct TabularEnvOptions {
  std::size_t n_contexts = 3;
  std::size_t n_actions = 4;
  std::size_t n_surrogates = 3;
  TabularRewardStructure structure = TabularRewardStructure::kGeneral;
  // p(s|x,a) = p(s|x) for every action.
  bool action_independent_surrogates = false;
  // Noise variance is drawn per (x,s) from U[0, max_noise_var].
  double max_noise_var = 0.1;
};

/// Seeded random tables, normalized where they must be distributions.
TabularEnv random_tabular_env(std::uint64_t seed, const TabularEnvOptions& options = {});
/// Rows drawn from U[0.2, 1] and normalized: full support, moderate weights.
TabularPolicy random_tabular_policy(std::uint64_t seed, std::size_t n_contexts, std::size_t n_actions);

Vector tabular_marginal_surrogate(const TabularEnv& env, const TabularPolicy& policy, std::size_t x);

struct KernelMoments {
  double mean = 0.0;
  double variance = 0.0;  // single-record variance
};

/// Exact expectation of a per-record kernel under data logged by `logging`,
/// i.e. the expectation of the estimator at any sample size. Throws
/// NumericError naming the tuple if the kernel returns a non-finite value.
double tabular_exact_estimator_expectation(const TabularEnv& env, const TabularPolicy& logging,
                                           const RecordKernel& kernel);
KernelMoments tabular_exact_kernel_moments(const TabularEnv& env, const TabularPolicy& logging,
                                           const RecordKernel& kernel);
Vector tabular_exact_vector_expectation(const TabularEnv& env, const TabularPolicy& logging,
                                        const VectorKernel& kernel);

struct IdentitySides {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap() const;
};

/// lhs = V[w(x,a)] - V[w(x,s)] under p(x) pi0(a|x) p(s|x,a);
/// rhs = E_{p(x) pi0(s|x)} V_{pi0(a|x,s)}[w(x,a)].
IdentitySides tabular_weight_variance_identity(const TabularEnv& env, const TabularPolicy& logging,
                                               const TabularPolicy& target);

/// lhs = E[w(x,a)^2 sigma2(x,s)] - E[w(x,s)^2 sigma2(x,s)];
/// rhs = E_{p(x) pi0(s|x)}[sigma2(x,s) V_{pi0(a|x,s)}[w(x,a)]].
/// sigma2_xs is n_contexts x n_surrogates.
IdentitySides tabular_noise_term_identity(const TabularEnv& env, const TabularPolicy& logging,
                                          const TabularPolicy& target, const Matrix& sigma2_xs);

/// Single-record variance of the DR kernel against its three-term split:
/// E[w^2 sigma^2(x,a)] + E_x V_{pi0}[w (q - q_hat)] + V_x[E_{pi1} q].
struct DrVarianceTerms {
  double enumerated = 0.0;
  double noise_term = 0.0;
  double error_term = 0.0;
  double value_term = 0.0;
  double sum() const { return noise_term + error_term + value_term; }
};

DrVarianceTerms tabular_dr_variance_decomposition(const TabularEnv& env, const TabularPolicy& logging,
                                                  const TabularPolicy& target, const Matrix& q_hat);

}  // namespace lope
