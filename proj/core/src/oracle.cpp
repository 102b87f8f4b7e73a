#include "ratelab/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ratelab/errors.hpp"
#include "ratelab/math.hpp"

namespace ratelab {

namespace {

// Root of S(zeta) = sum_a ref(a) phi_inverse(r_a/beta - zeta) - 1 for one
// prompt. S is strictly decreasing; bracket by doubling, then safeguarded
// Newton. Solved to |S| <= 1e-14 so downstream diagnostics clear 1e-12
// even after reconstructing the shift from the returned policy.
double solve_prompt_shift(std::span<const double> ref_probs,
                          std::span<const double> rewards, double beta,
                          const DivergenceKind& kind) {
  const auto residual = [&](double zeta) {
    double s = -1.0;
    for (std::size_t a = 0; a < ref_probs.size(); ++a) {
      s += ref_probs[a] * phi_inverse(rewards[a] / beta - zeta, kind);
    }
    return s;
  };
  const auto slope = [&](double zeta) {
    // dS/dzeta = -sum ref_a * y_a / (gamma*y_a + 1) with y = phi_inverse(..)
    const double gamma = kind.phi_gamma();
    double s = 0.0;
    for (std::size_t a = 0; a < ref_probs.size(); ++a) {
      const double y = phi_inverse(rewards[a] / beta - zeta, kind);
      s -= ref_probs[a] * y / (gamma * y + 1.0);
    }
    return s;
  };

  // Start from the KL shift, which is exact at gamma = 0.
  double m = rewards[0] / beta;
  for (std::size_t a = 0; a < rewards.size(); ++a) m = std::max(m, rewards[a] / beta);
  double acc = 0.0;
  for (std::size_t a = 0; a < rewards.size(); ++a) {
    acc += ref_probs[a] * std::exp(rewards[a] / beta - m);
  }
  double lo = m + std::log(acc);
  double hi = lo;
  double width = 1.0;
  while (residual(lo) < 0.0) { lo -= width; width *= 2.0; }
  width = 1.0;
  while (residual(hi) > 0.0) { hi += width; width *= 2.0; }

  double zeta = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = residual(zeta);
    if (std::abs(f) <= 1e-14) return zeta;
    if (f > 0.0) lo = zeta; else hi = zeta;
    const double df = slope(zeta);
    double next = zeta - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    zeta = next;
  }
  throw NumericError("optimal_policy: shift root-find did not converge in 200 steps");
}

void check_oracle_shapes(const RewardTable& r, const SoftmaxPolicy& ref,
                         const PromptDist& nu, const char* op) {
  if (!r.values.same_shape(ref.logits())) {
    throw DimensionError(std::string(op) + ": reward/reference shape mismatch");
  }
  if (nu.num_prompts() != r.prompts()) {
    throw DimensionError(std::string(op) + ": prompt distribution size mismatch");
  }
}

}  // namespace

SoftmaxPolicy optimal_policy(const RewardTable& r, double beta,
                             const SoftmaxPolicy& ref, const PromptDist& nu,
                             const DivergenceKind& kind) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("optimal_policy: beta must be positive");
  }
  check_oracle_shapes(r, ref, nu, "optimal_policy");
  const double gamma = kind.phi_gamma();
  const Table log_ref = ref.log_probs();
  Table logits(r.prompts(), r.responses());
  if (gamma == 0.0) {
    for (int x = 0; x < r.prompts(); ++x) {
      for (int a = 0; a < r.responses(); ++a) {
        logits.at(x, a) = log_ref.at(x, a) + r.values.at(x, a) / beta;
      }
    }
    return SoftmaxPolicy(std::move(logits));
  }
  Table ref_probs = ref.probs();
  for (int x = 0; x < r.prompts(); ++x) {
    const double zeta = solve_prompt_shift(ref_probs.row(x), r.values.row(x), beta, kind);
    for (int a = 0; a < r.responses(); ++a) {
      const double y = phi_inverse(r.values.at(x, a) / beta - zeta, kind);
      logits.at(x, a) = log_ref.at(x, a) + std::log(y);
    }
  }
  return SoftmaxPolicy(std::move(logits));
}

double objective_j_beta(const SoftmaxPolicy& policy, const RewardTable& r,
                        double beta, const SoftmaxPolicy& ref,
                        const PromptDist& nu, const DivergenceKind& kind) {
  check_oracle_shapes(r, ref, nu, "objective_j_beta");
  if (!policy.logits().same_shape(ref.logits())) {
    throw DimensionError("objective_j_beta: policy shape mismatch");
  }
  const Table probs = policy.probs();
  double expected_reward = 0.0;
  for (int x = 0; x < r.prompts(); ++x) {
    double row = 0.0;
    for (int a = 0; a < r.responses(); ++a) row += probs.at(x, a) * r.values.at(x, a);
    expected_reward += nu.weights[static_cast<std::size_t>(x)] * row;
  }
  double value = expected_reward;
  switch (kind.tag) {
    case DivergenceKind::Tag::kKl:
      value -= beta * kl_divergence(policy, ref, nu);
      break;
    case DivergenceKind::Tag::kChi2:
      value -= beta * chi2_divergence(policy, ref, nu);
      break;
    case DivergenceKind::Tag::kKlPlusGammaChi2:
      value -= beta * (kl_divergence(policy, ref, nu) +
                       kind.gamma * chi2_divergence(policy, ref, nu));
      break;
  }
  return value;
}

double suboptimality_gap(const SoftmaxPolicy& policy, const Environment& env,
                         double beta_eff) {
  if (!(beta_eff > 0.0)) {
    throw std::invalid_argument("suboptimality_gap: beta_eff must be positive");
  }
  const SoftmaxPolicy best = optimal_policy(env.r_star, beta_eff, env.pi_ref, env.nu0);
  const double j_best = objective_j_beta(best, env.r_star, beta_eff, env.pi_ref, env.nu0);
  const double j_policy = objective_j_beta(policy, env.r_star, beta_eff, env.pi_ref, env.nu0);
  return j_best - j_policy;
}

double concentrability(const SoftmaxPolicy& pi, const Environment& env) {
  if (!pi.logits().same_shape(env.pi_data.logits())) {
    throw DimensionError("concentrability: policy shape mismatch");
  }
  const Table lp = pi.log_probs();
  const Table ld = env.pi_data.log_probs();
  double total = 0.0;
  for (int x = 0; x < pi.prompts(); ++x) {
    double row = 0.0;
    for (int a = 0; a < pi.responses(); ++a) {
      row += std::exp(2.0 * lp.at(x, a) - ld.at(x, a));
    }
    total += env.nu0.weights[static_cast<std::size_t>(x)] * row;
  }
  return total;
}

double c_star(const Environment& env, double beta_eff) {
  return concentrability(optimal_policy(env.r_star, beta_eff, env.pi_ref, env.nu0), env);
}

double c_max(std::span<const SoftmaxPolicy> policies, const Environment& env) {
  if (policies.empty()) throw std::invalid_argument("c_max: empty policy list");
  double best = 0.0;
  for (const auto& pi : policies) best = std::max(best, concentrability(pi, env));
  return best;
}

GapFn gaps_of(const RewardTable& table) {
  return [table](int x, int a, int b) { return table.gap(x, a, b); };
}

double err_rating(const GapFn& r_hat_gaps, const Environment& env) {
  const Table probs_data = env.pi_data.probs();
  double total = 0.0;
  for (int x = 0; x < env.prompts(); ++x) {
    const double nu = env.nu0.weights[static_cast<std::size_t>(x)];
    if (nu == 0.0) continue;
    double row = 0.0;
    for (int a = 0; a < env.responses(); ++a) {
      for (int b = 0; b < env.responses(); ++b) {
        const double d = env.r_star.gap(x, a, b) - r_hat_gaps(x, a, b);
        row += probs_data.at(x, a) * probs_data.at(x, b) * d * d;
      }
    }
    total += nu * row;
  }
  return total;
}

double err_rating(const RewardTable& r_hat, const Environment& env) {
  if (!r_hat.values.same_shape(env.r_star.values)) {
    throw DimensionError("err_rating: estimate shape mismatch");
  }
  return err_rating(gaps_of(r_hat), env);
}

double empirical_rating_error(const Dataset& ds, const Environment& env) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& e : ds.examples) {
    if (!e.has_rating) continue;
    const double d = e.rating_gap - env.r_star.gap(e.prompt, e.chosen, e.rejected);
    sum += d * d;
    ++count;
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / static_cast<double>(count);
}

void BoundParams::validate() const {
  if (!(c > 0.0) || !(r_max > 0.0) || n < 1 || !(policy_class_size >= 1.0)) {
    throw std::invalid_argument("BoundParams: c, r_max, n, policy_class_size must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("BoundParams: delta must be in (0,1)");
  }
}

RateBounds rate_bounds(const BoundParams& params, double err_rating_value,
                       double variance, double c_conc, double beta) {
  params.validate();
  if (std::isnan(err_rating_value)) {
    err_rating_value = std::numeric_limits<double>::infinity();
  }
  if (!(err_rating_value >= 0.0)) {
    throw std::invalid_argument("rate_bounds: err_rating must be >= 0");
  }
  if (!(variance >= 0.0) || !(c_conc > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("rate_bounds: variance >= 0, c_conc > 0, beta > 0 required");
  }
  const double log_term = std::log(params.policy_class_size / params.delta);
  const double n = static_cast<double>(params.n);
  RateBounds out;
  out.err_dpo =
      params.c * params.r_max * params.r_max * std::exp(4.0 * params.r_max) * log_term / n;
  out.rdpo_bound = std::sqrt(c_conc * std::min(out.err_dpo, err_rating_value));
  out.mlrdpo_bound = std::sqrt(
      c_conc *
      std::min(std::exp(params.r_max) * params.r_max * params.r_max,
               params.r_max * params.r_max + variance) *
      log_term / n);
  out.beta1_prescribed =
      err_rating_value == 0.0 ? 0.0 : beta * err_rating_value / out.err_dpo;
  return out;
}

ErrorDecomposition error_decomposition_check(const Environment& env,
                                             const GapFn& r_out_gaps,
                                             const GapFn& r_hat_gaps,
                                             double err_dpo_value) {
  if (!(err_dpo_value >= 0.0)) {
    throw std::invalid_argument("error_decomposition_check: err_dpo must be >= 0");
  }
  ErrorDecomposition out;
  out.err_out = err_rating(r_out_gaps, env);
  out.err_hat = err_rating(r_hat_gaps, env);
  // alpha = (1 + Err(r_hat)/err_dpo)^-1, with full rating trust at the 0/0 corner.
  out.alpha = (out.err_hat == 0.0 && err_dpo_value == 0.0)
                  ? 1.0
                  : err_dpo_value / (err_dpo_value + out.err_hat);
  const double alpha = out.alpha;
  const GapFn mixed = [&](int x, int a, int b) {
    return (1.0 - alpha) * r_out_gaps(x, a, b) + alpha * r_hat_gaps(x, a, b);
  };
  out.err_bar = err_rating(mixed, env);
  out.young_rhs = 2.0 * (1.0 - alpha) * (1.0 - alpha) * out.err_out +
                  2.0 * alpha * alpha * out.err_hat;
  const double tol = 1e-12 * std::max(1.0, out.young_rhs);
  out.young_slack = out.young_rhs - out.err_bar;
  out.young_holds = out.err_bar <= out.young_rhs + tol;
  out.lemma_rhs = (err_dpo_value == 0.0 || out.err_hat == 0.0)
                      ? 0.0
                      : 2.0 * err_dpo_value * out.err_hat / (err_dpo_value + out.err_hat);
  out.lemma_condition = out.err_out <= err_dpo_value;
  out.lemma_holds = out.err_bar <= out.lemma_rhs + tol;
  return out;
}

}  // namespace ratelab
