#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ratelab/env.hpp"
#include "ratelab/errors.hpp"
#include "ratelab/oracle.hpp"
#include "ratelab/rng.hpp"
#include "ratelab/trainer.hpp"

#include "helpers.hpp"

using namespace ratelab;

namespace {

TrainConfig quick_config(long steps, double lr, TrainMode mode = TrainMode::kEmpirical) {
  TrainConfig cfg;
  cfg.learning_rate = lr;
  cfg.steps = steps;
  cfg.log_every = std::max<long>(1, steps / 4);
  cfg.mode = mode;
  return cfg;
}

}  // namespace

TEST_CASE("a zero learning-rate step leaves the policy unchanged") {
  const Environment env = testing::small_env(1);
  const Dataset ds = sample_dataset(env, 50, RatingModel::exact(), 1);
  TrainConfig cfg = quick_config(1, 1.0);
  cfg.learning_rate = 1e-300;  // validated positive; numerically a no-op
  const TrainResult result = train(testing::make_spec(LossFamily::kDpo), env, ds, cfg);
  const Table got = result.policy.probs();
  const Table want = env.pi_ref.probs();
  for (std::size_t i = 0; i < got.data().size(); ++i) {
    CHECK(got.data()[i] == want.data()[i]);
  }
}

TEST_CASE("training traces are bit-deterministic") {
  const Environment env = testing::small_env(2);
  const Dataset ds = sample_dataset(env, 120, RatingModel::exact(), 2);
  const AlgorithmSpec spec = testing::make_spec(LossFamily::kRdpo);
  const TrainConfig cfg = quick_config(200, 0.5);
  const TrainResult a = train(spec, env, ds, cfg);
  const TrainResult b = train(spec, env, ds, cfg);
  REQUIRE(a.trace.records.size() == b.trace.records.size());
  for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
    CHECK(a.trace.records[i].step == b.trace.records[i].step);
    CHECK(a.trace.records[i].loss == b.trace.records[i].loss);
    CHECK(a.trace.records[i].grad_norm == b.trace.records[i].grad_norm);
    CHECK(a.trace.records[i].subopt_gap == b.trace.records[i].subopt_gap);
    CHECK(a.trace.records[i].kl_to_ref == b.trace.records[i].kl_to_ref);
  }
  for (std::size_t i = 0; i < a.policy.logits().data().size(); ++i) {
    CHECK(a.policy.logits().data()[i] == b.policy.logits().data()[i]);
  }
}

TEST_CASE("trace structure: increasing steps, finite losses, endpoints logged") {
  const Environment env = testing::small_env(3);
  const Dataset ds = sample_dataset(env, 80, RatingModel::exact(), 3);
  const TrainResult result =
      train(testing::make_spec(LossFamily::kMlRdpo), env, ds, quick_config(100, 0.5));
  const auto& records = result.trace.records;
  REQUIRE(records.size() >= 2);
  CHECK(records.front().step == 0);
  CHECK(records.back().step == 100);
  for (std::size_t i = 1; i < records.size(); ++i) {
    CHECK(records[i].step > records[i - 1].step);
  }
  for (const auto& r : records) {
    CHECK(std::isfinite(r.loss));
    CHECK(std::isfinite(r.grad_norm));
  }
  CHECK(records.back().loss <= records.front().loss);
}

TEST_CASE("per-prompt logit shifts change neither loss nor policy") {
  const Environment env = testing::small_env(4);
  const Dataset ds = sample_dataset(env, 60, RatingModel::exact(), 4);
  Rng rng(5);
  const SoftmaxPolicy pi = testing::random_policy(rng, env.prompts(), env.responses());
  SoftmaxPolicy shifted = pi;
  for (int a = 0; a < env.responses(); ++a) shifted.logits().at(1, a) += 7.25;

  const AlgorithmSpec spec = testing::make_spec(LossFamily::kRdpo);
  const double l0 = loss(spec, pi, env, ds);
  const double l1 = loss(spec, shifted, env, ds);
  CHECK(std::abs(l0 - l1) <= 1e-12 * std::max(1.0, std::abs(l0)));

  const Table p0 = pi.probs();
  shifted.recenter();
  SoftmaxPolicy recentred = pi;
  recentred.recenter();
  const Table p1 = shifted.probs();
  const Table p2 = recentred.probs();
  for (std::size_t i = 0; i < p0.data().size(); ++i) {
    CHECK(std::abs(p1.data()[i] - p0.data()[i]) <= 1e-14);
    CHECK(std::abs(p2.data()[i] - p0.data()[i]) <= 1e-14);
  }
}

TEST_CASE("gradient clipping caps the update norm") {
  const Environment env = testing::small_env(5);
  const Dataset ds = sample_dataset(env, 100, RatingModel::exact(), 6);
  TrainConfig cfg = quick_config(1, 1.0);
  cfg.grad_clip = 1e-4;
  const TrainResult result = train(testing::make_spec(LossFamily::kDdpo), env, ds, cfg);
  double moved = 0.0;
  for (std::size_t i = 0; i < result.policy.logits().data().size(); ++i) {
    const double d = result.policy.logits().data()[i] - env.pi_ref.logits().data()[i];
    moved += d * d;
  }
  // recentring only removes per-prompt means, which cannot grow the norm
  CHECK(std::sqrt(moved) <= cfg.learning_rate * *cfg.grad_clip + 1e-12);
}

TEST_CASE("finite_diff_gradcheck thresholds per family") {
  const Environment env = testing::small_env(6);
  Rng rng(7);
  const Dataset ds = sample_dataset(env, 48, RatingModel::exact(), 8);
  for (const auto& spec : testing::all_family_specs()) {
    const SoftmaxPolicy pi = testing::random_policy(rng, env.prompts(), env.responses());
    const GradCheckReport report = finite_diff_gradcheck(spec, pi, env, ds, 1e-5);
    CAPTURE(to_string(spec.family));
    CHECK(report.max_rel_err <= 1e-5);
  }
  // quadratic families carry no transcendental error
  for (const auto family : {LossFamily::kIpo, LossFamily::kRipo, LossFamily::kDdpo}) {
    const SoftmaxPolicy pi = testing::random_policy(rng, env.prompts(), env.responses());
    const GradCheckReport report =
        finite_diff_gradcheck(testing::make_spec(family), pi, env, ds, 1e-5);
    CAPTURE(to_string(family));
    CHECK(report.max_rel_err <= 1e-7);
  }
  CHECK_THROWS_AS(finite_diff_gradcheck(testing::make_spec(LossFamily::kDpo), env.pi_ref,
                                        env, ds, 0.5),
                  std::invalid_argument);
}

TEST_CASE("finite differences tighten as the step shrinks") {
  const Environment env = testing::small_env(7);
  Rng rng(8);
  const SoftmaxPolicy pi = testing::random_policy(rng, env.prompts(), env.responses(), 2.0);
  const Dataset ds = sample_dataset(env, 64, RatingModel::exact(), 9);
  const AlgorithmSpec spec = testing::make_spec(LossFamily::kRdpo);
  const double coarse = finite_diff_gradcheck(spec, pi, env, ds, 1e-2).max_rel_err;
  const double fine = finite_diff_gradcheck(spec, pi, env, ds, 1e-5).max_rel_err;
  CHECK(coarse > fine);
}

TEST_CASE("saturation and kink flags") {
  const Environment env = testing::small_env(8);
  Rng rng(9);
  // push margins deep into the log-sigmoid tail
  const SoftmaxPolicy far = testing::random_policy(rng, env.prompts(), env.responses(), 400.0);
  const Dataset ds = sample_dataset(env, 30, RatingModel::exact(), 10);
  const GradCheckReport sat =
      finite_diff_gradcheck(testing::make_spec(LossFamily::kDpo), far, env, ds, 1e-5);
  CHECK(sat.saturated);

  // a kink-adjacent penalized instance: margin 0, gap/beta1 == delta_max
  AlgorithmSpec pen = testing::make_spec(LossFamily::kRdpoPenalized, 0.1, 1.0);
  pen.delta_max = 0.75;
  Dataset kink;
  kink.seed = 0;
  kink.examples.push_back({0, 1, 2, 1, true, -0.75});
  const GradCheckReport near =
      finite_diff_gradcheck(pen, env.pi_ref, env, kink, 1e-5);
  CHECK(near.near_kink);
}

TEST_CASE("population DPO training converges to the closed form") {
  const Environment env = testing::small_env(9, 3, 4);
  const AlgorithmSpec spec = testing::make_spec(LossFamily::kDpo);
  TrainConfig cfg = quick_config(20000, 5.0, TrainMode::kPopulation);
  const TrainResult result = train(spec, env, RatingModel::exact(), cfg);
  const SoftmaxPolicy star = optimal_policy(env.r_star, spec.beta, env.pi_ref, env.nu0);
  CHECK(kl_divergence(result.policy, star, env.nu0) <= 1e-4);
  CHECK(result.trace.records.back().grad_norm <= 1e-6);
  // training shrinks the suboptimality gap
  CHECK(result.trace.records.back().subopt_gap <= result.trace.records.front().subopt_gap);
}

TEST_CASE("population RDPO and ML-RDPO reach first-order stationarity") {
  const Environment env = testing::small_env(10, 4, 4);
  for (const auto family : {LossFamily::kRdpo, LossFamily::kMlRdpo}) {
    const AlgorithmSpec spec = testing::make_spec(family, 0.1, 0.1, 0.1);
    TrainConfig cfg = quick_config(40000, 2.0, TrainMode::kPopulation);
    const TrainResult result = train(spec, env, RatingModel::exact(), cfg);
    CAPTURE(to_string(family));
    CHECK(result.trace.records.back().grad_norm <= 1e-6);
  }
}

TEST_CASE("large-sample empirical training approaches the population run") {
  const Environment env = testing::small_env(11, 4, 4);
  const AlgorithmSpec spec = testing::make_spec(LossFamily::kDpo);
  TrainConfig cfg = quick_config(200, 2.0);
  const Dataset big = sample_dataset(env, 200000, RatingModel::exact(), 11);
  const TrainResult empirical = train(spec, env, big, cfg);
  cfg.mode = TrainMode::kPopulation;
  const TrainResult population = train(spec, env, RatingModel::exact(), cfg);
  const double gap_emp = suboptimality_gap(empirical.policy, env, spec.beta);
  const double gap_pop = suboptimality_gap(population.policy, env, spec.beta);
  CHECK(gap_emp <= 2.0 * gap_pop);
}

TEST_CASE("training aborts on divergence with the step index") {
  const Environment env = testing::small_env(12);
  const Dataset ds = sample_dataset(env, 40, RatingModel::exact(), 12);
  TrainConfig cfg = quick_config(200, 1e12);
  bool threw = false;
  try {
    train(testing::make_spec(LossFamily::kIpo), env, ds, cfg);
  } catch (const TrainingError& e) {
    threw = true;
    CHECK(e.step > 0);
  }
  CHECK(threw);
}

TEST_CASE("mode/overload mismatches are rejected") {
  const Environment env = testing::small_env(13);
  const Dataset ds = sample_dataset(env, 10, RatingModel::exact(), 13);
  TrainConfig cfg = quick_config(5, 0.1, TrainMode::kPopulation);
  CHECK_THROWS_AS(train(testing::make_spec(LossFamily::kDpo), env, ds, cfg),
                  std::invalid_argument);
  cfg.mode = TrainMode::kEmpirical;
  CHECK_THROWS_AS(train(testing::make_spec(LossFamily::kDpo), env, RatingModel::exact(), cfg),
                  std::invalid_argument);
  cfg.steps = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
