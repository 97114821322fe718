#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lope/envs/synthetic_env.hpp"
#include "lope/estimators/reward_models.hpp"
#include "lope/estimators/surrogate_weights.hpp"
#include "lope/harness/metrics.hpp"
#include "lope/learners/trainer.hpp"

namespace lope {

enum class SweepParameter { kN, kLambda, kSigmaR, kEpsilon, kSigmaS, kNClusters };

std::string to_string(SweepParameter p);
SweepParameter sweep_parameter_from_string(const std::string& name);

struct ExperimentConfig {
  SyntheticEnvConfig env;
  std::size_t n = 500;  // n_H = n_S = n_E
  std::size_t replications = 500;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  // false: a new environment draw per replication.
  bool fix_env_across_replications = false;
  NuisanceConfig nuisance;
  std::vector<std::string> estimators{"avg", "lci", "ips", "dr", "lope"};
};

struct SweepConfig {
  ExperimentConfig base;
  SweepParameter parameter = SweepParameter::kN;
  std::vector<double> grid{200, 400, 600, 800, 1000};

  void validate() const;
};

/// Sets one swept parameter; integer parameters must be whole numbers.
ExperimentConfig apply_parameter(ExperimentConfig config, SweepParameter parameter, double value);

nlohmann::json to_json(const ExperimentConfig& config);
/// Keys: env, n, replications, seed, workers, fix_env_across_replications,
/// nuisance, estimators. Missing keys keep defaults.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

/// Everything one replication of one cell needs.
struct Replication {
  std::shared_ptr<const SyntheticEnv> env;
  TabularPolicy logging;
  TabularPolicy target;
  HistoricalDataset dh;
  ShortTermDataset ds;
  LongTermOutcomes de;
  double true_value = 0.0;     // V(pi1)
  double logging_value = 0.0;  // V(pi0)
  std::optional<RewardModelBundle> bundle;
  std::optional<SurrogateWeightModel> weights;
};

/// Deterministic in (config, replication). Nuisances are fitted on D_H when
/// requested.
Replication make_replication(const ExperimentConfig& config, std::size_t replication, bool fit_nuisances);

/// Draws s ~ p(s|x,a) from the environment, for hbar_mode env_monte_carlo.
SurrogateSampler env_surrogate_sampler(std::shared_ptr<const SyntheticEnv> env);

struct NamedEstimator {
  std::string name;
  std::function<double(const Replication&)> estimate;
  bool needs_nuisances = false;
};

/// avg (skyline on D_E), lci, ips, dr, lope.
NamedEstimator standard_estimator(const std::string& name);
std::vector<NamedEstimator> standard_estimators(const std::vector<std::string>& names);

struct SweepReport {
  SweepParameter parameter = SweepParameter::kN;
  std::vector<MetricRow> rows;       // grid-major, estimators in configured order
  std::vector<std::string> failures; // one line per failed (cell, replication, estimator)
};

/// Estimators default to the configured names.
SweepReport run_evaluation_sweep(const SweepConfig& config, const std::vector<NamedEstimator>& estimators = {});

struct SelectionRow {
  std::string estimator;
  double parameter_value = 0.0;
  double accuracy = 0.0;
  std::size_t n_replications = 0;
  bool complete = true;
};

struct SelectionReport {
  SweepParameter parameter = SweepParameter::kN;
  std::vector<SelectionRow> rows;
  std::vector<std::string> failures;
};

/// Success when sign(V_hat(pi1) - V_hat(pi0)) equals sign(V(pi1) - V(pi0)),
/// with V_hat(pi0) the on-policy mean of D_H.
SelectionReport run_selection_experiment(const SweepConfig& config,
                                         const std::vector<NamedEstimator>& estimators = {});

/// Learners default to the three-hidden-layer policy network.
struct OplConfig {
  SweepConfig sweep;
  LearnerConfig learner = [] {
    LearnerConfig c;
    c.parameterization = PolicyParameterization::kMlp3;
    return c;
  }();
  std::vector<std::string> learners{"ips_pg", "dr_pg", "lope_pg", "reg_based"};
};

struct OplRow {
  std::string learner;
  double parameter_value = 0.0;
  double mean_value = 0.0;      // mean exact value of the trained policy
  double relative_value = 0.0;  // mean_value / LOPE-PG's mean_value
  std::size_t n_replications = 0;
  bool complete = true;
};

struct OplReport {
  SweepParameter parameter = SweepParameter::kN;
  std::vector<OplRow> rows;
  std::vector<std::string> failures;
};

/// D_H only; each learner's policy is scored by its exact value.
OplReport run_opl_experiment(const OplConfig& config);

}  // namespace lope
