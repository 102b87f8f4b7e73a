#pragma once

#include <string>
#include <string_view>
#include <utility>

#include "ratelab/env.hpp"
#include "ratelab/tables.hpp"

namespace ratelab {

/// The loss families. Ranking-only: DPO, IPO. Rating-only: DDPO. Mixed:
/// RDPO, RIPO, RPO, ML-RDPO, penalized RDPO. The *_HETERO variants accept
/// ranking and rating labels on different (possibly disjoint) example sets.
enum class LossFamily {
  kDpo,
  kIpo,
  kRdpo,
  kRipo,
  kDdpo,
  kMlRdpo,
  kRpo,
  kRdpoPenalized,
  kRdpoHetero,
  kMlRdpoHetero,
};

constexpr int kNumLossFamilies = 10;
const char* to_string(LossFamily family);
LossFamily loss_family_from_string(std::string_view name);

/// Which loss to run plus its hyperparameters. Field names match the JSON
/// schema one-to-one.
///
/// beta weighs reward against deviation from the reference policy. beta1 is
/// the rating trust weight of the RDPO family (the smaller beta1, the more
/// the ratings are trusted). variance is the Gaussian rating-noise scale of
/// ML-RDPO. divergence selects the link phi (gamma > 0 adds chi^2
/// regularization). lambda1/lambda2/delta_max parameterize the penalized
/// margin restriction.
struct AlgorithmSpec {
  LossFamily family = LossFamily::kDpo;
  double beta = 0.1;
  double beta1 = 1.0;
  double variance = 1.0;
  DivergenceKind divergence = DivergenceKind::kl();
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double delta_max = 2.0;

  bool uses_beta1() const;
  bool uses_variance() const;
  /// DPO/IPO never read ratings; ML-RDPO-shaped losses tolerate missing
  /// ones; the rest require a rating gap on every example.
  bool requires_full_ratings() const;
  bool is_rdpo_family() const;

  /// Regularization strength at which the family's suboptimality gap is
  /// evaluated: beta*beta1/(beta+beta1) for the RDPO family, beta otherwise.
  double beta_eff() const;

  void validate() const;
};

/// Margin between responses a and b of one prompt under the chosen link:
/// phi(pi/pi_ref)(x,a) - phi(pi/pi_ref)(x,b). For the KL kind this is the
/// usual difference of log ratios; antisymmetric in (a, b) and identically
/// zero at policy == ref.
double delta_theta(const SoftmaxPolicy& policy, const SoftmaxPolicy& ref,
                   int prompt, int a, int b, const DivergenceKind& kind);

/// Loss summed over the dataset (no 1/N). With margin u, gap g:
///   DPO     sum -log sigmoid(beta*u)
///   IPO     sum (u - 1/(2 beta))^2
///   RDPO    sum -log sigmoid(beta*u - (beta/beta1)*g)
///   RIPO    sum (beta*u - (beta/beta1)*g - 1/2)^2
///   DDPO    sum (g - beta*u)^2
///   ML-RDPO sum -log sigmoid(beta*u) + (g - beta*u)^2 / (2*variance)
///   RPO     sum KL(Bern(sigmoid(u)), Bern(sigmoid(g)))
///   RDPO_PENALIZED adds lambda1*relu(u - g/beta1 - delta_max)
///                     + lambda2*relu(-u + g/beta1 - delta_max) per example
/// The heterogeneous families treat the whole dataset as the ranking set and
/// its rated subset as the rating set (see loss_hetero for disjoint sets).
double loss(const AlgorithmSpec& spec, const SoftmaxPolicy& policy,
            const Environment& env, const Dataset& ds);

/// Exact gradient of loss() with respect to every logit. Prompts absent
/// from the dataset get a zero block.
Table grad_loss(const AlgorithmSpec& spec, const SoftmaxPolicy& policy,
                const Environment& env, const Dataset& ds);

/// Least-squares fit of a tabular reward to the observed rating gaps
/// (regression targets are chosen-minus-rejected gaps). Gaps are the
/// identified quantity; the fit is normalized to zero mean per prompt.
RewardTable fit_rating_lsq(const Dataset& rated, const Environment& env);

/// Two-dataset form of the heterogeneous losses. RDPO_HETERO first fits a
/// rating table on `rated` and then runs the RDPO sum over `ranked` with the
/// fitted gaps; MLRDPO_HETERO is the ranking sum over `ranked` plus the
/// unweighted squared rating sum over `rated`.
double loss_hetero(const AlgorithmSpec& spec, const SoftmaxPolicy& policy,
                   const Environment& env, const Dataset& ranked,
                   const Dataset& rated);

/// Fused one-pass evaluation for optimization inner loops; identical values
/// to loss() and grad_loss().
struct LossAndGrad {
  double value = 0.0;
  Table grad;
};

LossAndGrad loss_and_grad(const AlgorithmSpec& spec, const SoftmaxPolicy& policy,
                          const Environment& env, const Dataset& ds);

LossAndGrad population_loss_and_grad(const AlgorithmSpec& spec,
                                     const SoftmaxPolicy& policy,
                                     const Environment& env,
                                     const RatingModel& rating);

/// Trainer-facing reduction: RDPO_HETERO becomes plain RDPO on the dataset
/// re-keyed to least-squares fitted gaps (the fit depends only on the data,
/// so it is done once per run); every other family passes through.
std::pair<AlgorithmSpec, Dataset> effective_problem(const AlgorithmSpec& spec,
                                                    const Environment& env,
                                                    const Dataset& ds);

/// Exact expectation of the per-example loss under the data-generating law
/// (prompt ~ nu0, responses i.i.d. ~ pi_data, Bradley-Terry preference,
/// rating per the model). Quadratic rating terms take their Gaussian
/// expectation in closed form (adds variance * coefficient per rated pair);
/// families with no closed form under the requested rating law throw
/// std::invalid_argument.
double population_loss(const AlgorithmSpec& spec, const SoftmaxPolicy& policy,
                       const Environment& env, const RatingModel& rating);

/// Gradient of population_loss with respect to the logits.
Table grad_population_loss(const AlgorithmSpec& spec,
                           const SoftmaxPolicy& policy, const Environment& env,
                           const RatingModel& rating);

}  // namespace ratelab
