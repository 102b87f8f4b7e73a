#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "ratelab/env.hpp"
#include "ratelab/losses.hpp"
#include "ratelab/tables.hpp"

namespace ratelab {

/// Closed-form maximizer of the regularized objective for reward r at
/// strength beta. KL kind: pi*(a|x) proportional to pi_ref(a|x)*exp(r/beta).
/// Mixed kind (gamma > 0): per prompt, solves the shift zeta(x) with
/// sum_a pi_ref(a|x) * phi_inverse(r(x,a)/beta - zeta(x)) = 1 (monotone root
/// find, residual <= 1e-12) and returns pi_ref * phi_inverse(r/beta - zeta).
SoftmaxPolicy optimal_policy(const RewardTable& r, double beta,
                             const SoftmaxPolicy& ref, const PromptDist& nu,
                             const DivergenceKind& kind = DivergenceKind::kl());

/// Regularized objective <pi, r> - beta*KL(pi, ref), minus beta*gamma*chi2
/// for the mixed kind. <pi, r> is the nu0-weighted expected reward.
double objective_j_beta(const SoftmaxPolicy& policy, const RewardTable& r,
                        double beta, const SoftmaxPolicy& ref,
                        const PromptDist& nu,
                        const DivergenceKind& kind = DivergenceKind::kl());

/// J_{beta_eff}(pi*; r*) - J_{beta_eff}(policy; r*) against the closed-form
/// optimum; nonnegative up to ~1e-10 numerical slack.
double suboptimality_gap(const SoftmaxPolicy& policy, const Environment& env,
                         double beta_eff);

/// Concentrability C^pi = sum_x nu0 sum_a pi^2/pi_data; >= 1 with equality
/// iff pi == pi_data on the support of nu0. Identity: C^pi = 1 + 2*chi2.
double concentrability(const SoftmaxPolicy& pi, const Environment& env);

/// C^pi at the closed-form optimal policy for r* at beta_eff.
double c_star(const Environment& env, double beta_eff);

/// Maximum concentrability over a supplied finite policy list (upper proxy
/// for the class maximum used by the bound diagnostics).
double c_max(std::span<const SoftmaxPolicy> policies, const Environment& env);

/// Gap function r(x,a) - r(x,b) abstraction for error metrics.
using GapFn = std::function<double(int prompt, int a, int b)>;

GapFn gaps_of(const RewardTable& table);

/// Err(r_hat): expectation over x ~ nu0 and a,b i.i.d. ~ pi_data of the
/// squared difference between the true and estimated reward gaps. Invariant
/// under per-prompt additive shifts of the estimate.
double err_rating(const GapFn& r_hat_gaps, const Environment& env);
double err_rating(const RewardTable& r_hat, const Environment& env);

/// Mean squared (gap - true gap) over the rated examples of a dataset; NaN
/// when nothing is rated.
double empirical_rating_error(const Dataset& ds, const Environment& env);

/// Constants of the rate formulas. `c` is the explicit constant inside
/// Err_DPO (default 32); everything else enters as written, with big-O
/// constants set to 1. Diagnostics only, never asserted tight.
struct BoundParams {
  double c = 32.0;
  double delta = 0.1;
  double policy_class_size = 100.0;
  double r_max = 2.0;
  std::uint64_t n = 1;
  void validate() const;
};

struct RateBounds {
  /// c * r_max^2 * e^{4 r_max} * log(|Pi|/delta) / n
  double err_dpo = 0.0;
  /// sqrt(C * min{err_dpo, Err(r_hat)})
  double rdpo_bound = 0.0;
  /// sqrt(C * min{e^{r_max} r_max^2, r_max^2 + variance} * log(|Pi|/delta)/n)
  double mlrdpo_bound = 0.0;
  /// beta * Err(r_hat) / err_dpo; 0 means full trust in the ratings.
  double beta1_prescribed = 0.0;
};

RateBounds rate_bounds(const BoundParams& params, double err_rating_value,
                       double variance, double c_conc, double beta);

/// Numerical check of the error-decomposition inequality for the mixture
/// r_bar = (1-alpha) r_out + alpha r_hat with alpha = 1/(1 + Err(r_hat)/err_dpo).
/// The Young form Err(r_bar) <= 2(1-alpha)^2 Err(r_out) + 2 alpha^2 Err(r_hat)
/// must hold for every input; the full harmonic-mean bound additionally needs
/// Err(r_out) <= err_dpo and is reported as data, never asserted.
struct ErrorDecomposition {
  double alpha = 0.0;
  double err_out = 0.0;
  double err_hat = 0.0;
  double err_bar = 0.0;
  double young_rhs = 0.0;
  double young_slack = 0.0;
  bool young_holds = false;
  double lemma_rhs = 0.0;
  bool lemma_condition = false;
  bool lemma_holds = false;
};

ErrorDecomposition error_decomposition_check(const Environment& env,
                                             const GapFn& r_out_gaps,
                                             const GapFn& r_hat_gaps,
                                             double err_dpo_value);

}  // namespace ratelab
