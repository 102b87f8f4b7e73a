#include <benchmark/benchmark.h>

#include "ratelab/env.hpp"
#include "ratelab/losses.hpp"
#include "ratelab/oracle.hpp"
#include "ratelab/rng.hpp"

namespace {

using namespace ratelab;

Environment bench_env() {
  EnvSpec spec;
  spec.num_prompts = 8;
  spec.num_responses = 6;
  spec.reward_seed = 7;
  return make_environment(spec);
}

SoftmaxPolicy bench_policy(const Environment& env) {
  Rng rng(11);
  Table logits(env.prompts(), env.responses());
  for (double& v : logits.data()) v = rng.normal();
  return SoftmaxPolicy(std::move(logits));
}

AlgorithmSpec bench_spec(LossFamily family) {
  AlgorithmSpec spec;
  spec.family = family;
  spec.beta = 0.1;
  spec.beta1 = 0.1;
  spec.variance = 0.01;
  return spec;
}

void BM_SampleDataset(benchmark::State& state) {
  const Environment env = bench_env();
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sample_dataset(env, static_cast<std::size_t>(state.range(0)),
                       RatingModel::exact(), ++seed));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleDataset)->Arg(1000)->Arg(10000);

void BM_LossDpo(benchmark::State& state) {
  const Environment env = bench_env();
  const SoftmaxPolicy pi = bench_policy(env);
  const Dataset ds =
      sample_dataset(env, static_cast<std::size_t>(state.range(0)), RatingModel::exact(), 3);
  const AlgorithmSpec spec = bench_spec(LossFamily::kDpo);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss(spec, pi, env, ds));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossDpo)->Arg(1000)->Arg(10000);

void BM_LossAndGradMlRdpo(benchmark::State& state) {
  const Environment env = bench_env();
  const SoftmaxPolicy pi = bench_policy(env);
  const Dataset ds =
      sample_dataset(env, static_cast<std::size_t>(state.range(0)), RatingModel::exact(), 4);
  const AlgorithmSpec spec = bench_spec(LossFamily::kMlRdpo);
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_grad(spec, pi, env, ds));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossAndGradMlRdpo)->Arg(1000)->Arg(10000);

void BM_PopulationLossAndGrad(benchmark::State& state) {
  const Environment env = bench_env();
  const SoftmaxPolicy pi = bench_policy(env);
  const AlgorithmSpec spec = bench_spec(LossFamily::kDpo);
  for (auto _ : state) {
    benchmark::DoNotOptimize(population_loss_and_grad(spec, pi, env, RatingModel::exact()));
  }
}
BENCHMARK(BM_PopulationLossAndGrad);

void BM_OptimalPolicyMixed(benchmark::State& state) {
  const Environment env = bench_env();
  const DivergenceKind kind = DivergenceKind::kl_plus_chi2(1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(optimal_policy(env.r_star, 0.1, env.pi_ref, env.nu0, kind));
  }
}
BENCHMARK(BM_OptimalPolicyMixed);

void BM_FitRatingLsq(benchmark::State& state) {
  const Environment env = bench_env();
  const Dataset ds = sample_dataset(env, 2000, RatingModel::gaussian(0.25), 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_rating_lsq(ds, env));
  }
}
BENCHMARK(BM_FitRatingLsq);

}  // namespace

BENCHMARK_MAIN();
