#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ratelab/env.hpp"
#include "ratelab/losses.hpp"

namespace ratelab {

enum class TrainMode { kEmpirical, kPopulation };

/// Plain full-batch gradient descent on the policy logits. EMPIRICAL mode
/// minimizes loss/N so learning rates transfer across dataset sizes;
/// POPULATION mode minimizes the exact expected loss. Logits are re-centered
/// per prompt after every step (the induced policy is unchanged).
struct TrainConfig {
  double learning_rate = 0.1;
  long steps = 1000;
  std::uint64_t seed = 0;  // reserved for stochastic schedules; unused by full-batch GD
  TrainMode mode = TrainMode::kEmpirical;
  long log_every = 100;
  std::optional<Table> init_logits;  // empty = start from the reference policy
  std::optional<double> grad_clip;   // global L2 clip

  void validate() const;
};

struct TraceRecord {
  long step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double subopt_gap = 0.0;
  double kl_to_ref = 0.0;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
};

struct TrainResult {
  SoftmaxPolicy policy;
  TrainTrace trace;
};

/// EMPIRICAL training on a dataset. Aborts with TrainingError (carrying the
/// step index) if the loss or gradient turns non-finite.
TrainResult train(const AlgorithmSpec& spec, const Environment& env,
                  const Dataset& ds, const TrainConfig& cfg);

/// POPULATION training against the exact expected loss for the rating law.
TrainResult train(const AlgorithmSpec& spec, const Environment& env,
                  const RatingModel& rating, const TrainConfig& cfg);

struct GradCheckReport {
  double max_rel_err = 0.0;
  /// Any example sat in the log-sigmoid tail (|argument| > 30)?
  bool saturated = false;
  /// Any penalized-hinge argument within 2*step of its kink?
  bool near_kink = false;
};

/// Central-difference check of grad_loss on every logit (or a random subset
/// of >= 200 coordinates for large tables). Relative error uses an absolute
/// floor of 1e-8 on the denominator.
GradCheckReport finite_diff_gradcheck(const AlgorithmSpec& spec,
                                      const SoftmaxPolicy& policy,
                                      const Environment& env, const Dataset& ds,
                                      double step);

}  // namespace ratelab
