#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lope/estimators/reward_models.hpp"
#include "lope/estimators/surrogate_weights.hpp"
#include "lope/learners/policy_model.hpp"
#include "lope/types.hpp"

namespace lope {

enum class GradientEstimator { kIpsPg, kDrPg, kLopePg };

/// Which score multiplies the LOPE-PG importance term.
///   kMarginal:     (r - h_hat) * sum_a' pi0(a'|x,s) w_theta(x,a') s_theta(x,a'),
///                  i.e. w_theta(x,s) grad log pi_theta(s|x). Unbiased under
///                  surrogacy or CPC.
///   kLoggedAction: w_theta(x,s) (r - h_hat) s_theta(x,a_i), the form that pairs
///                  the surrogate weight with the logged action's score. Its
///                  expectation weights the score by pi0(a|x,s) instead of
///                  pi_theta(a|x,s), so it is biased whenever the surrogate does
///                  not pin down the action.
enum class LopeScore { kMarginal, kLoggedAction };

std::string to_string(GradientEstimator g);
GradientEstimator gradient_estimator_from_string(const std::string& name);
std::string to_string(LopeScore s);
LopeScore lope_score_from_string(const std::string& name);

/// Everything about D_H that stays fixed while theta moves.
struct GradientTerms {
  GradientEstimator estimator = GradientEstimator::kIpsPg;
  LopeScore lope_score = LopeScore::kMarginal;
  std::vector<std::size_t> users;
  std::vector<std::size_t> actions;
  std::vector<double> propensities;
  std::vector<double> rewards;
  std::vector<double> baseline;  // q_hat(x_i,a_i) for DR, h_hat(x_i,a_i,s_i) for LOPE, 0 for IPS
  Matrix direct;                 // n_users x n_actions: q_hat (DR), m (LOPE), zero (IPS)
  Matrix posterior_ratio;        // LOPE only, n x n_actions: pi0(a|x_i,s_i) / pi0(a|x_i)

  std::size_t size() const { return users.size(); }
};

GradientTerms ips_pg_terms(const HistoricalDataset& dh, std::size_t n_users, std::size_t n_actions);
GradientTerms dr_pg_terms(const HistoricalDataset& dh, const Matrix& q_hat_xa);
/// The weight model supplies pi0(a|x,s) and pi0(a|x); its target is ignored.
GradientTerms lope_pg_terms(const HistoricalDataset& dh, const SurrogateWeightModel& weights,
                            const RewardModelFn& h_hat, const Matrix& h_bar, LopeScore score = LopeScore::kMarginal);

/// Coefficients c over actions such that record i's gradient term is
/// backprop(x_i, c - sum(c) pi_theta(.|x_i)).
Vector record_coefficients(const GradientTerms& terms, std::size_t i, const Eigen::Ref<const Vector>& pi_row);
/// The matching value estimator's term for record i evaluated at pi_theta.
double record_value(const GradientTerms& terms, std::size_t i, const Eigen::Ref<const Vector>& pi_row);

/// Mean gradient over the records in `subset` (all records when empty).
Vector policy_gradient(const GradientTerms& terms, const SoftmaxPolicyModel& model, const Matrix& features,
                       std::span<const std::size_t> subset = {});
double estimated_value(const GradientTerms& terms, const SoftmaxPolicyModel& model, const Matrix& features);

Vector grad_ips_pg(const HistoricalDataset& dh, const SoftmaxPolicyModel& model, const Matrix& features);
Vector grad_dr_pg(const HistoricalDataset& dh, const SoftmaxPolicyModel& model, const Matrix& features,
                  const Matrix& q_hat_xa);
Vector grad_lope_pg(const HistoricalDataset& dh, const SoftmaxPolicyModel& model, const Matrix& features,
                    const SurrogateWeightModel& weights, const RewardModelBundle& bundle,
                    LopeScore score = LopeScore::kMarginal);

/// Per-record gradient kernels for exact expectations on the tabular oracle.
VectorKernel ips_pg_kernel(const SoftmaxPolicyModel& model, const Matrix& features);
VectorKernel dr_pg_kernel(const SoftmaxPolicyModel& model, const Matrix& features, const Matrix& q_hat_xa);
VectorKernel lope_pg_kernel(const SoftmaxPolicyModel& model, const Matrix& features,
                            const SurrogateWeightModel& weights, const RewardModelFn& h_hat, const Matrix& h_bar,
                            LopeScore score = LopeScore::kMarginal);

/// grad_theta V(pi_theta) = sum_x p(x) sum_a grad pi_theta(a|x) q(x,a), analytically.
Vector exact_policy_gradient(const SoftmaxPolicyModel& model, const Matrix& features, const Matrix& q_table,
                             const Vector& weights);

}  // namespace lope
