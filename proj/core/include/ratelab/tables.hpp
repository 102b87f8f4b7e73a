#pragma once

#include <span>
#include <vector>

#include "ratelab/math.hpp"

namespace ratelab {

/// Dense row-major (prompt, response) grid; the base layout for rewards,
/// logits and gradients.
class Table {
 public:
  Table() = default;
  Table(int prompts, int responses, double fill = 0.0);

  int prompts() const { return prompts_; }
  int responses() const { return responses_; }
  bool same_shape(const Table& other) const {
    return prompts_ == other.prompts_ && responses_ == other.responses_;
  }

  double& at(int x, int a) { return v_[static_cast<std::size_t>(x) * responses_ + a]; }
  double at(int x, int a) const { return v_[static_cast<std::size_t>(x) * responses_ + a]; }

  std::span<double> row(int x) {
    return {v_.data() + static_cast<std::size_t>(x) * responses_,
            static_cast<std::size_t>(responses_)};
  }
  std::span<const double> row(int x) const {
    return {v_.data() + static_cast<std::size_t>(x) * responses_,
            static_cast<std::size_t>(responses_)};
  }

  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }

 private:
  int prompts_ = 0;
  int responses_ = 0;
  std::vector<double> v_;
};

/// Distribution over prompt indices; weights are nonnegative and sum to 1
/// within 1e-12.
struct PromptDist {
  std::vector<double> weights;

  int num_prompts() const { return static_cast<int>(weights.size()); }
  static PromptDist uniform(int n);
  void validate() const;
};

/// Bounded latent reward (or a rating estimate) with its declared range.
/// Environment rewards obey 0 <= r_min <= value <= r_max; gap-identified
/// fitted tables reuse the type with r_min/r_max as the observed range.
struct RewardTable {
  Table values;
  double r_min = 0.0;
  double r_max = 0.0;

  int prompts() const { return values.prompts(); }
  int responses() const { return values.responses(); }
  double gap(int x, int a, int b) const { return values.at(x, a) - values.at(x, b); }

  /// Environment-level invariant (Assumption-2-style bounds).
  void validate() const;
};

/// Tabular policy: logits over (prompt, response), inducing a per-prompt
/// softmax. Full support by construction.
class SoftmaxPolicy {
 public:
  SoftmaxPolicy() = default;
  explicit SoftmaxPolicy(Table logits) : logits_(std::move(logits)) {}

  static SoftmaxPolicy uniform(int prompts, int responses) {
    return SoftmaxPolicy(Table(prompts, responses, 0.0));
  }

  int prompts() const { return logits_.prompts(); }
  int responses() const { return logits_.responses(); }

  Table& logits() { return logits_; }
  const Table& logits() const { return logits_; }

  /// Row-wise log-softmax of the logits.
  Table log_probs() const;
  Table probs() const;

  /// Subtract the per-prompt mean logit; the induced policy is unchanged.
  void recenter();

 private:
  Table logits_;
};

/// nu0-weighted KL divergence sum_x nu0(x) sum_a p(a|x) log(p(a|x)/q(a|x)).
/// Zero exactly when p == q on the support of nu0.
double kl_divergence(const SoftmaxPolicy& p, const SoftmaxPolicy& q,
                     const PromptDist& nu);

/// nu0-weighted chi^2 divergence 0.5*(sum_x nu0(x) sum_a p^2/q - 1);
/// dominates the KL divergence pointwise.
double chi2_divergence(const SoftmaxPolicy& p, const SoftmaxPolicy& q,
                       const PromptDist& nu);

}  // namespace ratelab
