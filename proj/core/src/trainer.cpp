#include "ratelab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ratelab/errors.hpp"
#include "ratelab/math.hpp"
#include "ratelab/oracle.hpp"
#include "ratelab/rng.hpp"

namespace ratelab {

namespace {

double l2_norm(const Table& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

struct Objective {
  std::function<LossAndGrad(const SoftmaxPolicy&)> eval;
};

TrainResult run_descent(const AlgorithmSpec& spec, const Environment& env,
                        const Objective& objective, const TrainConfig& cfg) {
  SoftmaxPolicy policy = cfg.init_logits
                             ? SoftmaxPolicy(*cfg.init_logits)
                             : SoftmaxPolicy(env.pi_ref.logits());
  if (!policy.logits().same_shape(env.pi_ref.logits())) {
    throw DimensionError("train: init logits shape mismatch");
  }
  policy.recenter();

  const double beta_eff = spec.beta_eff();
  const SoftmaxPolicy best = optimal_policy(env.r_star, beta_eff, env.pi_ref, env.nu0);
  const double j_best = objective_j_beta(best, env.r_star, beta_eff, env.pi_ref, env.nu0);
  const auto gap_of = [&](const SoftmaxPolicy& pi) {
    return j_best - objective_j_beta(pi, env.r_star, beta_eff, env.pi_ref, env.nu0);
  };

  TrainResult out;
  for (long step = 0; step < cfg.steps; ++step) {
    LossAndGrad eval = objective.eval(policy);
    if (!std::isfinite(eval.value)) throw TrainingError("train: non-finite loss", step);
    const double norm = l2_norm(eval.grad);
    if (!std::isfinite(norm)) throw TrainingError("train: non-finite gradient", step);
    if (step % cfg.log_every == 0) {
      out.trace.records.push_back({step, eval.value, norm, gap_of(policy),
                                   kl_divergence(policy, env.pi_ref, env.nu0)});
    }
    if (cfg.grad_clip && norm > *cfg.grad_clip) {
      const double scale = *cfg.grad_clip / norm;
      for (double& g : eval.grad.data()) g *= scale;
    }
    auto& logits = policy.logits().data();
    const auto& g = eval.grad.data();
    for (std::size_t i = 0; i < logits.size(); ++i) {
      logits[i] -= cfg.learning_rate * g[i];
    }
    policy.recenter();
  }
  const LossAndGrad final_eval = objective.eval(policy);
  if (!std::isfinite(final_eval.value)) {
    throw TrainingError("train: non-finite loss", cfg.steps);
  }
  out.trace.records.push_back({cfg.steps, final_eval.value, l2_norm(final_eval.grad),
                               gap_of(policy), kl_divergence(policy, env.pi_ref, env.nu0)});
  out.policy = std::move(policy);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("TrainConfig: learning_rate must be positive");
  }
  if (steps < 1) throw std::invalid_argument("TrainConfig: steps must be >= 1");
  if (log_every < 1) throw std::invalid_argument("TrainConfig: log_every must be >= 1");
  if (grad_clip && !(*grad_clip > 0.0)) {
    throw std::invalid_argument("TrainConfig: grad_clip must be positive");
  }
}

TrainResult train(const AlgorithmSpec& spec, const Environment& env,
                  const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  env.validate();
  if (cfg.mode != TrainMode::kEmpirical) {
    throw std::invalid_argument("train: dataset overload requires EMPIRICAL mode");
  }
  if (ds.size() == 0) throw DataError("train: empty dataset");
  // The hetero fit and rating checks happen once, not per step.
  const auto [eff_spec, eff_ds] = effective_problem(spec, env, ds);
  const double inv_n = 1.0 / static_cast<double>(eff_ds.size());
  Objective objective;
  objective.eval = [&, inv_n](const SoftmaxPolicy& pi) {
    LossAndGrad out = loss_and_grad(eff_spec, pi, env, eff_ds);
    out.value *= inv_n;
    for (double& v : out.grad.data()) v *= inv_n;
    return out;
  };
  return run_descent(spec, env, objective, cfg);
}

TrainResult train(const AlgorithmSpec& spec, const Environment& env,
                  const RatingModel& rating, const TrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  env.validate();
  if (cfg.mode != TrainMode::kPopulation) {
    throw std::invalid_argument("train: rating-model overload requires POPULATION mode");
  }
  // Fail early on unsupported family/rating combinations.
  population_loss(spec, SoftmaxPolicy(env.pi_ref.logits()), env, rating);
  Objective objective;
  objective.eval = [&](const SoftmaxPolicy& pi) {
    return population_loss_and_grad(spec, pi, env, rating);
  };
  return run_descent(spec, env, objective, cfg);
}

GradCheckReport finite_diff_gradcheck(const AlgorithmSpec& spec,
                                      const SoftmaxPolicy& policy,
                                      const Environment& env, const Dataset& ds,
                                      double step) {
  if (!(step > 0.0 && step <= 1e-2)) {
    throw std::invalid_argument("finite_diff_gradcheck: step must be in (0, 1e-2]");
  }
  const Table analytic = grad_loss(spec, policy, env, ds);
  const int prompts = policy.prompts();
  const int responses = policy.responses();
  const std::size_t total = static_cast<std::size_t>(prompts) * responses;

  std::vector<std::size_t> coords(total);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (total > 400) {
    // Deterministic subset of >= 200 coordinates for large tables.
    Rng rng = Rng(0xC0FFEE ^ total);
    for (std::size_t i = 0; i < 200; ++i) {
      std::swap(coords[i], coords[i + rng.uniform_below(total - i)]);
    }
    coords.resize(200);
  }

  // Central differences cannot resolve anything below the rounding noise of
  // the loss itself; differences inside that band count as exact (otherwise
  // zero-gradient coordinates would report pure eps*|loss|/(2h) noise).
  const double base = std::abs(loss(spec, policy, env, ds));
  const double noise_floor =
      16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, base) / (2.0 * step);

  SoftmaxPolicy probe = policy;
  GradCheckReport report;
  for (std::size_t idx : coords) {
    double& slot = probe.logits().data()[idx];
    const double saved = slot;
    slot = saved + step;
    const double up = loss(spec, probe, env, ds);
    slot = saved - step;
    const double down = loss(spec, probe, env, ds);
    slot = saved;
    const double fd = (up - down) / (2.0 * step);
    const double ga = analytic.data()[idx];
    const double diff = std::abs(ga - fd);
    if (diff <= noise_floor) continue;
    const double rel = diff / std::max({std::abs(ga), std::abs(fd), 1e-8});
    report.max_rel_err = std::max(report.max_rel_err, rel);
  }

  // Flag log-sigmoid saturation and hinge-kink proximity so callers can pick
  // the relaxed threshold.
  const auto [eff_spec, eff_ds] = effective_problem(spec, env, ds);
  for (const auto& e : eff_ds.examples) {
    const double u = delta_theta(policy, env.pi_ref, e.prompt, e.chosen, e.rejected,
                                 eff_spec.divergence);
    double sig_arg = 0.0;
    switch (eff_spec.family) {
      case LossFamily::kDpo:
      case LossFamily::kMlRdpo:
      case LossFamily::kMlRdpoHetero:
        sig_arg = eff_spec.beta * u;
        break;
      case LossFamily::kRdpo:
      case LossFamily::kRdpoPenalized:
        sig_arg = eff_spec.beta * u - (eff_spec.beta / eff_spec.beta1) * e.rating_gap;
        break;
      case LossFamily::kRpo:
        sig_arg = std::max(std::abs(u), std::abs(e.rating_gap));
        break;
      default:
        break;
    }
    if (std::abs(sig_arg) > 30.0) report.saturated = true;
    if (eff_spec.family == LossFamily::kRdpoPenalized) {
      const double h = u - e.rating_gap / eff_spec.beta1;
      const double margin = std::min(std::abs(h - eff_spec.delta_max),
                                     std::abs(h + eff_spec.delta_max));
      if (margin <= 10.0 * step) report.near_kink = true;
    }
  }
  return report;
}

}  // namespace ratelab
