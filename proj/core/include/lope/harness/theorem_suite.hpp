#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lope/envs/tabular_env.hpp"
#include "lope/estimators/reward_models.hpp"
#include "lope/estimators/surrogate_weights.hpp"

namespace lope {

/// Surrogate weights built from the exact pi0(a|x,s) of a tabular env.
SurrogateWeightModel exact_tabular_weights(const TabularEnv& env, const TabularPolicy& logging,
                                           const TabularPolicy& target);

/// h_hat(x,a,s) = q(x,a,s) + phi(x,s): pairwise action differences are exact.
RewardModelFn cpc_reward_model(const TabularEnv& env, const Matrix& phi);
/// Any tabulated h_hat(x,a,s), indexed like the env tensors.
RewardModelFn table_reward_model(const TabularEnv& env, std::vector<double> table);
/// m(x,a) = sum_s p(s|x,a) h_hat(x,a,s), exactly.
Matrix exact_h_bar(const TabularEnv& env, const RewardModelFn& h_hat);

struct TheoremCheck {
  std::string name;
  double value = 0.0;  // largest gap, or the smallest bias for the negative control
  double tolerance = 0.0;
  bool passed = false;
  bool informational = false;  // reported but never fails the suite
  std::string detail;
};

struct TheoremSuiteOptions {
  std::uint64_t seed = 0;
  std::size_t n_envs = 10;
  // Evaluate pi1 = pi0. Every gap should then be zero; the negative control
  // has nothing to detect and becomes informational.
  bool on_policy = false;
};

struct TheoremSuiteReport {
  std::vector<TheoremCheck> checks;

  bool all_passed() const;
  /// Largest gap over the identity checks (negative control excluded).
  double max_identity_gap() const;
  const TheoremCheck& find(const std::string& name) const;
};

TheoremSuiteReport run_theorem_suite(const TheoremSuiteOptions& options = {});

}  // namespace lope
