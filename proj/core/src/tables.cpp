#include "ratelab/tables.hpp"

#include <cmath>
#include <stdexcept>

#include "ratelab/errors.hpp"

namespace ratelab {

namespace {

void check_same_grid(const SoftmaxPolicy& p, const SoftmaxPolicy& q,
                     const PromptDist& nu, const char* op) {
  if (!p.logits().same_shape(q.logits())) {
    throw DimensionError(std::string(op) + ": policy shapes differ");
  }
  if (nu.num_prompts() != p.prompts()) {
    throw DimensionError(std::string(op) + ": prompt distribution size mismatch");
  }
}

void log_softmax_row(std::span<const double> logits, std::span<double> out) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += std::exp(logits[i] - m);
  const double lz = m + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lz;
}

}  // namespace

Table::Table(int prompts, int responses, double fill)
    : prompts_(prompts),
      responses_(responses),
      v_(static_cast<std::size_t>(prompts) * responses, fill) {
  if (prompts <= 0 || responses <= 0) {
    throw DimensionError("Table: prompts and responses must be positive");
  }
}

PromptDist PromptDist::uniform(int n) {
  if (n <= 0) throw DimensionError("PromptDist: need at least one prompt");
  PromptDist d;
  d.weights.assign(static_cast<std::size_t>(n), 1.0 / n);
  return d;
}

void PromptDist::validate() const {
  if (weights.empty()) throw DimensionError("PromptDist: empty");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("PromptDist: weights must be finite and >= 0");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("PromptDist: weights must sum to 1 within 1e-12");
  }
}

void RewardTable::validate() const {
  if (!(0.0 <= r_min) || !(r_min <= r_max)) {
    throw std::invalid_argument("RewardTable: requires 0 <= r_min <= r_max");
  }
  for (double v : values.data()) {
    if (!std::isfinite(v) || v < r_min || v > r_max) {
      throw std::invalid_argument("RewardTable: entry outside [r_min, r_max]");
    }
  }
}

Table SoftmaxPolicy::log_probs() const {
  Table out(prompts(), responses());
  for (int x = 0; x < prompts(); ++x) log_softmax_row(logits_.row(x), out.row(x));
  return out;
}

Table SoftmaxPolicy::probs() const {
  Table out = log_probs();
  for (double& v : out.data()) v = std::exp(v);
  return out;
}

void SoftmaxPolicy::recenter() {
  for (int x = 0; x < prompts(); ++x) {
    auto row = logits_.row(x);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(row.size());
    for (double& v : row) v -= mean;
  }
}

double kl_divergence(const SoftmaxPolicy& p, const SoftmaxPolicy& q,
                     const PromptDist& nu) {
  check_same_grid(p, q, nu, "kl_divergence");
  const Table lp = p.log_probs();
  const Table lq = q.log_probs();
  double total = 0.0;
  for (int x = 0; x < p.prompts(); ++x) {
    double row = 0.0;
    for (int a = 0; a < p.responses(); ++a) {
      row += std::exp(lp.at(x, a)) * (lp.at(x, a) - lq.at(x, a));
    }
    total += nu.weights[static_cast<std::size_t>(x)] * row;
  }
  return total;
}

double chi2_divergence(const SoftmaxPolicy& p, const SoftmaxPolicy& q,
                       const PromptDist& nu) {
  check_same_grid(p, q, nu, "chi2_divergence");
  const Table lp = p.log_probs();
  const Table lq = q.log_probs();
  double total = 0.0;
  for (int x = 0; x < p.prompts(); ++x) {
    double row = 0.0;
    for (int a = 0; a < p.responses(); ++a) {
      row += std::exp(2.0 * lp.at(x, a) - lq.at(x, a));
    }
    total += nu.weights[static_cast<std::size_t>(x)] * row;
  }
  return 0.5 * (total - 1.0);
}

}  // namespace ratelab
