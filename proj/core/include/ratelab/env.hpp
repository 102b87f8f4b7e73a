#pragma once

#include <cstdint>
#include <vector>

#include "ratelab/tables.hpp"

namespace ratelab {

/// A synthetic alignment problem: prompt distribution, latent reward, the
/// policy that generated the response pairs, and the reference policy.
struct Environment {
  PromptDist nu0;
  RewardTable r_star;
  SoftmaxPolicy pi_data;
  SoftmaxPolicy pi_ref;

  int prompts() const { return r_star.prompts(); }
  int responses() const { return r_star.responses(); }
  void validate() const;  // shared shape across all components
};

/// Generator knobs for the desk-scale default environment: uniform nu0,
/// rewards i.i.d. uniform on [0, r_max], pi_data = pi_ref = uniform.
struct EnvSpec {
  int num_prompts = 8;
  int num_responses = 6;
  double r_max = 2.0;
  std::uint64_t reward_seed = 0;
};

Environment make_environment(const EnvSpec& spec);

/// One comparison record: winner/loser response indices for a prompt, the
/// raw preference bit z of the draw, and an optional rating gap
/// (chosen-minus-rejected score estimate).
struct PreferenceExample {
  std::int32_t prompt = 0;
  std::int32_t chosen = 0;
  std::int32_t rejected = 0;
  std::int8_t z = 1;
  bool has_rating = false;
  double rating_gap = 0.0;
};

struct Dataset {
  std::vector<PreferenceExample> examples;
  std::uint64_t seed = 0;

  std::size_t size() const { return examples.size(); }
  std::size_t rated_count() const;
};

/// How rating gaps are attached to sampled pairs.
///   kExact:    gap = true reward gap
///   kGaussian: gap = true gap + N(0, variance)
///   kBiased:   gap from a supplied estimate table (dial in Err > 0 exactly)
struct RatingModel {
  enum class Mode { kExact, kGaussian, kBiased };

  Mode mode = Mode::kExact;
  double variance = 0.0;
  RewardTable biased_table;

  static RatingModel exact() { return {}; }
  static RatingModel gaussian(double variance);
  static RatingModel biased(RewardTable table);
  void validate() const;
};

struct CorruptionSpec {
  double swap_fraction = 0.0;
  double noise_variance = 0.0;
  double rating_obs_prob = 1.0;
  void validate() const;
};

/// Draws n examples: x ~ nu0, responses i.i.d. from pi_data, the preference
/// bit from the Bradley-Terry law z ~ Bern(sigmoid(reward gap)), then the
/// rating gap per the rating model. Bit-identical for identical inputs.
Dataset sample_dataset(const Environment& env, std::size_t n,
                       const RatingModel& rating, std::uint64_t seed);

/// Negates the rating gap on a uniformly chosen floor(fraction*N) subset
/// (a score swap, in gap representation). Preference bits untouched.
Dataset corrupt_swap(const Dataset& ds, double fraction, std::uint64_t seed);

/// Adds N(0, variance) noise to every present rating gap.
Dataset corrupt_noise(const Dataset& ds, double variance, std::uint64_t seed);

/// Keeps each rating gap independently with probability obs_prob.
Dataset mask_ratings(const Dataset& ds, double obs_prob, std::uint64_t seed);

/// Swap, then noise, then masking, with split streams from one seed.
Dataset apply_corruption(const Dataset& ds, const CorruptionSpec& corruption,
                         std::uint64_t seed);

}  // namespace ratelab
