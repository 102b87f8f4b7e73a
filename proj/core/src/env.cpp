#include "ratelab/env.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ratelab/errors.hpp"
#include "ratelab/math.hpp"
#include "ratelab/rng.hpp"

namespace ratelab {

namespace {

// Stream lanes, so the corruption passes never share draws with sampling.
constexpr std::uint64_t kSampleLane = 1;
constexpr std::uint64_t kSwapLane = 2;
constexpr std::uint64_t kNoiseLane = 3;
constexpr std::uint64_t kMaskLane = 4;

std::vector<double> inclusive_prefix(std::span<const double> weights) {
  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    cdf[i] = acc;
  }
  return cdf;
}

}  // namespace

void Environment::validate() const {
  nu0.validate();
  r_star.validate();
  if (nu0.num_prompts() != r_star.prompts()) {
    throw DimensionError("Environment: nu0/r_star prompt count mismatch");
  }
  if (!pi_data.logits().same_shape(r_star.values) ||
      !pi_ref.logits().same_shape(r_star.values)) {
    throw DimensionError("Environment: policy shape mismatch");
  }
}

Environment make_environment(const EnvSpec& spec) {
  if (spec.num_prompts <= 0 || spec.num_responses <= 0) {
    throw std::invalid_argument("EnvSpec: counts must be positive");
  }
  if (!(spec.r_max > 0.0) || !std::isfinite(spec.r_max)) {
    throw std::invalid_argument("EnvSpec: r_max must be positive and finite");
  }
  Environment env;
  env.nu0 = PromptDist::uniform(spec.num_prompts);
  env.r_star.values = Table(spec.num_prompts, spec.num_responses);
  env.r_star.r_min = 0.0;
  env.r_star.r_max = spec.r_max;
  Rng rng = Rng(spec.reward_seed).split(0xE);
  for (double& v : env.r_star.values.data()) v = rng.uniform01() * spec.r_max;
  env.pi_data = SoftmaxPolicy::uniform(spec.num_prompts, spec.num_responses);
  env.pi_ref = SoftmaxPolicy::uniform(spec.num_prompts, spec.num_responses);
  return env;
}

std::size_t Dataset::rated_count() const {
  std::size_t n = 0;
  for (const auto& e : examples) n += e.has_rating ? 1 : 0;
  return n;
}

RatingModel RatingModel::gaussian(double variance) {
  RatingModel m;
  m.mode = Mode::kGaussian;
  m.variance = variance;
  m.validate();
  return m;
}

RatingModel RatingModel::biased(RewardTable table) {
  RatingModel m;
  m.mode = Mode::kBiased;
  m.biased_table = std::move(table);
  return m;
}

void RatingModel::validate() const {
  if (mode == Mode::kGaussian && (!(variance >= 0.0) || !std::isfinite(variance))) {
    throw std::invalid_argument("RatingModel: variance must be finite and >= 0");
  }
}

void CorruptionSpec::validate() const {
  if (!(swap_fraction >= 0.0 && swap_fraction <= 1.0)) {
    throw std::invalid_argument("CorruptionSpec: swap_fraction must be in [0,1]");
  }
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("CorruptionSpec: noise_variance must be >= 0");
  }
  if (!(rating_obs_prob >= 0.0 && rating_obs_prob <= 1.0)) {
    throw std::invalid_argument("CorruptionSpec: rating_obs_prob must be in [0,1]");
  }
}

Dataset sample_dataset(const Environment& env, std::size_t n,
                       const RatingModel& rating, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_dataset: n must be >= 1");
  env.validate();
  rating.validate();
  if (rating.mode == RatingModel::Mode::kBiased &&
      !rating.biased_table.values.same_shape(env.r_star.values)) {
    throw DimensionError("sample_dataset: biased rating table shape mismatch");
  }

  const Table probs_data = env.pi_data.probs();
  const std::vector<double> prompt_cdf = inclusive_prefix(env.nu0.weights);
  std::vector<std::vector<double>> response_cdf(static_cast<std::size_t>(env.prompts()));
  for (int x = 0; x < env.prompts(); ++x) {
    response_cdf[static_cast<std::size_t>(x)] = inclusive_prefix(probs_data.row(x));
  }

  Dataset ds;
  ds.seed = seed;
  ds.examples.reserve(n);
  Rng rng = Rng(seed).split(kSampleLane);
  for (std::size_t i = 0; i < n; ++i) {
    const int x = rng.index_from_cdf(prompt_cdf);
    const auto& cdf = response_cdf[static_cast<std::size_t>(x)];
    const int a = rng.index_from_cdf(cdf);
    const int b = rng.index_from_cdf(cdf);
    const bool z = rng.bernoulli(sigmoid(env.r_star.gap(x, a, b)));
    PreferenceExample e;
    e.prompt = x;
    e.chosen = z ? a : b;
    e.rejected = z ? b : a;
    e.z = z ? 1 : 0;
    switch (rating.mode) {
      case RatingModel::Mode::kExact:
        e.has_rating = true;
        e.rating_gap = env.r_star.gap(x, e.chosen, e.rejected);
        break;
      case RatingModel::Mode::kGaussian:
        e.has_rating = true;
        e.rating_gap = env.r_star.gap(x, e.chosen, e.rejected) +
                       rng.normal(0.0, std::sqrt(rating.variance));
        break;
      case RatingModel::Mode::kBiased:
        e.has_rating = true;
        e.rating_gap = rating.biased_table.gap(x, e.chosen, e.rejected);
        break;
    }
    ds.examples.push_back(e);
  }
  return ds;
}

Dataset corrupt_swap(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("corrupt_swap: fraction must be in [0,1]");
  }
  Dataset out = ds;
  const std::size_t n = out.examples.size();
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  if (k == 0) return out;

  // Partial Fisher-Yates picks exactly k distinct indices.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng(seed).split(kSwapLane);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_below(n - i);
    std::swap(order[i], order[j]);
    auto& e = out.examples[order[i]];
    if (e.has_rating) e.rating_gap = -e.rating_gap;
  }
  return out;
}

Dataset corrupt_noise(const Dataset& ds, double variance, std::uint64_t seed) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument("corrupt_noise: variance must be >= 0");
  }
  Dataset out = ds;
  if (variance == 0.0) return out;
  const double stddev = std::sqrt(variance);
  Rng rng = Rng(seed).split(kNoiseLane);
  for (auto& e : out.examples) {
    if (e.has_rating) e.rating_gap += rng.normal(0.0, stddev);
  }
  return out;
}

Dataset mask_ratings(const Dataset& ds, double obs_prob, std::uint64_t seed) {
  if (!(obs_prob >= 0.0 && obs_prob <= 1.0)) {
    throw std::invalid_argument("mask_ratings: obs_prob must be in [0,1]");
  }
  Dataset out = ds;
  if (obs_prob == 1.0) return out;
  Rng rng = Rng(seed).split(kMaskLane);
  for (auto& e : out.examples) {
    if (!e.has_rating) continue;
    if (!rng.bernoulli(obs_prob)) {
      e.has_rating = false;
      e.rating_gap = 0.0;
    }
  }
  return out;
}

Dataset apply_corruption(const Dataset& ds, const CorruptionSpec& corruption,
                         std::uint64_t seed) {
  corruption.validate();
  Dataset out = corrupt_swap(ds, corruption.swap_fraction, seed);
  out = corrupt_noise(out, corruption.noise_variance, seed);
  out = mask_ratings(out, corruption.rating_obs_prob, seed);
  return out;
}

}  // namespace ratelab
