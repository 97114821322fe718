#include <benchmark/benchmark.h>

#include <map>

#include "lope/envs/synthetic_env.hpp"
#include "lope/estimators/estimators.hpp"
#include "lope/estimators/reward_models.hpp"
#include "lope/estimators/surrogate_weights.hpp"
#include "lope/harness/theorem_suite.hpp"
#include "lope/learners/gradients.hpp"
#include "lope/learners/policy_model.hpp"

namespace {

using namespace lope;

struct Fixture {
  SyntheticEnv env = SyntheticEnv::build(SyntheticEnvConfig{});
  TabularPolicy pi0 = env.make_logging_policy(0.5);
  TabularPolicy pi1 = env.make_target_policy(0.1);
  HistoricalDataset dh;

  explicit Fixture(std::size_t n) : dh(env.sample_historical(pi0, n, 1)) {}
};

const Fixture& fixture(std::size_t n) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, Fixture(n)).first;
  return it->second;
}

void BM_Ips(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ips_estimate(f.dh, f.pi1).value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Ips)->Arg(500)->Arg(5000);

void BM_FitRewardModels(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto b = fit_reward_models(f.dh, f.env.contexts(), f.env.n_actions(), NuisanceConfig{});
    benchmark::DoNotOptimize(b.h_bar.data());
  }
}
BENCHMARK(BM_FitRewardModels)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SurrogateWeights(benchmark::State& state) {
  const auto& f = fixture(500);
  NuisanceConfig cfg;
  cfg.weight_model = state.range(0) == 0 ? WeightModel::kGaussianBayes : WeightModel::kClassifier;
  for (auto _ : state) {
    const auto w = estimate_surrogate_weights(f.dh, f.env.contexts(), f.pi1, f.pi0, cfg);
    double total = 0.0;
    for (std::size_t i = 0; i < f.dh.size(); ++i) total += w.weight(f.dh.users[i], f.dh.short_row(i));
    benchmark::DoNotOptimize(total);
  }
}
BENCHMARK(BM_SurrogateWeights)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LopeEstimate(benchmark::State& state) {
  const auto& f = fixture(500);
  const NuisanceConfig cfg;
  const auto bundle = fit_reward_models(f.dh, f.env.contexts(), f.env.n_actions(), cfg);
  const auto w = estimate_surrogate_weights(f.dh, f.env.contexts(), f.pi1, f.pi0, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(lope_estimate(f.dh, w, bundle).value);
}
BENCHMARK(BM_LopeEstimate)->Unit(benchmark::kMicrosecond);

void BM_PolicyGradient(benchmark::State& state) {
  const auto& f = fixture(500);
  const Matrix& X = f.env.contexts().features;
  const auto model = state.range(0) == 0 ? SoftmaxPolicyModel::linear(X.cols(), f.env.n_actions())
                                         : SoftmaxPolicyModel::mlp3(X.cols(), f.env.n_actions(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(grad_ips_pg(f.dh, model, X).data());
}
BENCHMARK(BM_PolicyGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_TheoremSuite(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(run_theorem_suite({.seed = 1, .n_envs = 10}).all_passed());
}
BENCHMARK(BM_TheoremSuite)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
