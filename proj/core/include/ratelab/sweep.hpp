#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ratelab/env.hpp"
#include "ratelab/losses.hpp"
#include "ratelab/oracle.hpp"
#include "ratelab/trainer.hpp"

namespace ratelab {

/// What the grid points mean:
///   ACCELERATION      dataset sizes
///   ROBUST_SWAP       swap fractions
///   ROBUST_NOISE      rating noise variances
///   ABLATION_BETA1    beta1 overrides
///   ABLATION_VARIANCE variance overrides
///   MISSING_RATINGS   rating observation probabilities
enum class SweepKind {
  kAcceleration,
  kRobustSwap,
  kRobustNoise,
  kAblationBeta1,
  kAblationVariance,
  kMissingRatings,
};

const char* to_string(SweepKind kind);
SweepKind sweep_kind_from_string(std::string_view name);

struct SweepPlan {
  SweepKind kind = SweepKind::kAcceleration;
  std::vector<double> grid;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<std::uint64_t> seeds;
  EnvSpec env;
  std::size_t dataset_size = 2000;  // used by every kind except ACCELERATION
  RatingModel rating;
  TrainConfig train;
  BoundParams bounds;

  void validate() const;
};

/// Deterministic display labels, disambiguated when a family repeats.
std::vector<std::string> algorithm_labels(const SweepPlan& plan);

/// One row per (point, algorithm, seed). Failed runs keep their row with the
/// error message set and NaN metrics. Everything except wall_time_s is
/// bit-reproducible for identical plans.
struct RunResult {
  std::size_t point_index = 0;
  double point = 0.0;
  std::string algorithm;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double gap = 0.0;
  double final_loss = 0.0;
  double wall_time_s = 0.0;
  RateBounds bounds;
};

struct SweepResult {
  SweepKind kind = SweepKind::kAcceleration;
  std::vector<RunResult> rows;
};

/// Runs every (point, algorithm, seed) cell on a bounded worker pool; the
/// dataset for a (point, seed) pair is shared across algorithms (paired
/// comparisons) and derived from a stream split per (seed, point) so single
/// seeds can be re-run in isolation. Rows come back sorted by key.
SweepResult run_sweep(const SweepPlan& plan, int threads = 0);

std::string sweep_csv(const SweepResult& result);
std::string sweep_aggregates_json(const SweepResult& result);

std::string sweep_plan_to_json(const SweepPlan& plan);
SweepPlan sweep_plan_from_json(const std::string& text);

}  // namespace ratelab
