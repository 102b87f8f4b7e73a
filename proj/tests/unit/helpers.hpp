#pragma once

#include <cmath>
#include <vector>

#include "ratelab/env.hpp"
#include "ratelab/losses.hpp"
#include "ratelab/rng.hpp"

namespace ratelab::testing {

inline SoftmaxPolicy random_policy(Rng& rng, int prompts, int responses,
                                   double scale = 1.0) {
  Table logits(prompts, responses);
  for (double& v : logits.data()) v = scale * rng.normal();
  return SoftmaxPolicy(std::move(logits));
}

inline Environment small_env(std::uint64_t reward_seed, int prompts = 4,
                             int responses = 5, double r_max = 2.0) {
  EnvSpec spec;
  spec.num_prompts = prompts;
  spec.num_responses = responses;
  spec.r_max = r_max;
  spec.reward_seed = reward_seed;
  return make_environment(spec);
}

inline AlgorithmSpec make_spec(LossFamily family, double beta = 0.1,
                               double beta1 = 0.1, double variance = 0.01) {
  AlgorithmSpec spec;
  spec.family = family;
  spec.beta = beta;
  spec.beta1 = beta1;
  spec.variance = variance;
  if (family == LossFamily::kRdpoPenalized) {
    spec.lambda1 = 1.0;
    spec.lambda2 = 1.0;
    spec.delta_max = 2.0;
  }
  return spec;
}

inline std::vector<AlgorithmSpec> all_family_specs() {
  std::vector<AlgorithmSpec> specs;
  specs.push_back(make_spec(LossFamily::kDpo));
  specs.push_back(make_spec(LossFamily::kIpo));
  specs.push_back(make_spec(LossFamily::kRdpo));
  specs.push_back(make_spec(LossFamily::kRipo));
  specs.push_back(make_spec(LossFamily::kDdpo));
  specs.push_back(make_spec(LossFamily::kMlRdpo));
  specs.push_back(make_spec(LossFamily::kRpo));
  specs.push_back(make_spec(LossFamily::kRdpoPenalized));
  specs.push_back(make_spec(LossFamily::kRdpoHetero));
  specs.push_back(make_spec(LossFamily::kMlRdpoHetero));
  return specs;
}

}  // namespace ratelab::testing
