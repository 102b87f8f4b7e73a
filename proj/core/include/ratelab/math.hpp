#pragma once

#include <string>

namespace ratelab {

/// Logistic function 1/(1+e^{-t}). Throws std::domain_error on non-finite
/// input; sigmoid(t) + sigmoid(-t) == 1 for all finite t.
double sigmoid(double t);

/// Numerically stable log(sigmoid(t)); no overflow for |t| up to 1e4 and
/// beyond. Satisfies log_sigmoid(t) - log_sigmoid(-t) == t.
double log_sigmoid(double t);

/// Regularizer selector for the generalized link phi and closed forms.
/// KL_PLUS_GAMMA_CHI2 carries the chi^2 weight gamma; gamma == 0 recovers KL.
struct DivergenceKind {
  enum class Tag { kKl, kChi2, kKlPlusGammaChi2 };

  Tag tag = Tag::kKl;
  double gamma = 0.0;

  static DivergenceKind kl() { return {Tag::kKl, 0.0}; }
  static DivergenceKind chi2() { return {Tag::kChi2, 0.0}; }
  static DivergenceKind kl_plus_chi2(double gamma) {
    return {Tag::kKlPlusGammaChi2, gamma};
  }

  /// chi^2 weight as seen by phi: 0 for KL, gamma for the mixed kind.
  /// The pure-chi^2 tag has no invertible link and is rejected.
  double phi_gamma() const;

  bool operator==(const DivergenceKind& other) const {
    return tag == other.tag && gamma == other.gamma;
  }

  void validate() const;  // gamma >= 0 and finite
};

std::string to_string(const DivergenceKind& kind);

/// Link function of the generalized loss family: log x for KL,
/// gamma*x + log x for the mixed kind. Requires x > 0.
double phi(double x, const DivergenceKind& kind);

/// Exact inverse of phi, by safeguarded Newton iteration to residual
/// |phi(x) - v| <= 1e-12 (relative at large |v|). Throws NumericError if the
/// iteration has not converged after 200 steps.
double phi_inverse(double v, const DivergenceKind& kind);

}  // namespace ratelab
