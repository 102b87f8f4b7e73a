#include "ratelab/math.hpp"

#include <cmath>
#include <stdexcept>

#include "ratelab/errors.hpp"

namespace ratelab {

double sigmoid(double t) {
  if (!std::isfinite(t)) throw std::domain_error("sigmoid: non-finite input");
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double log_sigmoid(double t) {
  if (!std::isfinite(t)) throw std::domain_error("log_sigmoid: non-finite input");
  // Branch form of -softplus(-t); exact in both tails.
  if (t >= 0.0) return -std::log1p(std::exp(-t));
  return t - std::log1p(std::exp(t));
}

double DivergenceKind::phi_gamma() const {
  switch (tag) {
    case Tag::kKl:
      return 0.0;
    case Tag::kKlPlusGammaChi2:
      return gamma;
    case Tag::kChi2:
      throw std::domain_error("phi: pure chi^2 has no KL component; the link is not defined");
  }
  throw std::domain_error("phi: unknown divergence tag");
}

void DivergenceKind::validate() const {
  if (!std::isfinite(gamma) || gamma < 0.0) {
    throw std::invalid_argument("DivergenceKind: gamma must be finite and >= 0");
  }
  if (tag != Tag::kKlPlusGammaChi2 && gamma != 0.0) {
    throw std::invalid_argument("DivergenceKind: gamma only applies to KL_PLUS_GAMMA_CHI2");
  }
}

std::string to_string(const DivergenceKind& kind) {
  switch (kind.tag) {
    case DivergenceKind::Tag::kKl:
      return "KL";
    case DivergenceKind::Tag::kChi2:
      return "CHI2";
    case DivergenceKind::Tag::kKlPlusGammaChi2:
      return "KL_PLUS_GAMMA_CHI2(gamma=" + std::to_string(kind.gamma) + ")";
  }
  return "?";
}

double phi(double x, const DivergenceKind& kind) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error("phi: requires finite x > 0");
  }
  const double gamma = kind.phi_gamma();
  return gamma * x + std::log(x);
}

double phi_inverse(double v, const DivergenceKind& kind) {
  if (!std::isfinite(v)) throw std::domain_error("phi_inverse: non-finite input");
  const double gamma = kind.phi_gamma();
  if (gamma == 0.0) return std::exp(v);

  // Bracket the root of f(x) = gamma*x + log(x) - v, then safeguarded Newton.
  // f is increasing and concave on (0, inf).
  double lo = 1.0;
  double hi = 1.0;
  while (gamma * lo + std::log(lo) > v) lo *= 0.5;
  while (gamma * hi + std::log(hi) < v) hi *= 2.0;

  // Tolerance is absolute for O(1) arguments and relative for huge ones,
  // where a double cannot represent the difference more finely.
  const double tol = 1e-12 * std::max(1.0, std::abs(v));
  double x = std::min(std::max(std::exp(std::min(v, 700.0)), lo), hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = gamma * x + std::log(x) - v;
    if (std::abs(f) <= tol) return x;
    if (f > 0.0) hi = x; else lo = x;
    const double step = f / (gamma + 1.0 / x);
    double next = x - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  throw NumericError("phi_inverse: Newton iteration did not converge in 200 steps");
}

}  // namespace ratelab
