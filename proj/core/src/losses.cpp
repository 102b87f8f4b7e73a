#include "ratelab/losses.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratelab/errors.hpp"
#include "ratelab/math.hpp"

namespace ratelab {

namespace {

// Neumaier-compensated accumulator; reduction results are reproducible to
// well below the 1e-12 contract regardless of evaluation order.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }

  double value() const { return sum + comp; }
};

// One weighted comparison: an empirical example (weight 1) or a population
// cell. rank_part/rating_part steer the split families; add_const carries
// the closed-form Gaussian expectation of a quadratic rating term.
struct Term {
  std::int32_t prompt = 0;
  std::int32_t chosen = 0;
  std::int32_t rejected = 0;
  double weight = 1.0;
  bool has_gap = false;
  double gap = 0.0;
  bool rank_part = true;
  bool rating_part = true;
  double add_const = 0.0;
};

// Per-pass cache of both policies: log-probabilities always, plus the
// probability and ratio tables the mixed link needs.
struct PolicyView {
  Table log_p;
  Table log_ref;
  double gamma = 0.0;
  Table probs;
  Table ratio;

  static PolicyView make(const SoftmaxPolicy& policy, const SoftmaxPolicy& ref,
                         const DivergenceKind& kind) {
    if (!policy.logits().same_shape(ref.logits())) {
      throw DimensionError("loss: policy and reference shapes differ");
    }
    PolicyView view;
    view.log_p = policy.log_probs();
    view.log_ref = ref.log_probs();
    view.gamma = kind.phi_gamma();
    if (view.gamma > 0.0) {
      view.probs = view.log_p;
      view.ratio = view.log_p;
      for (int x = 0; x < view.log_p.prompts(); ++x) {
        for (int a = 0; a < view.log_p.responses(); ++a) {
          view.probs.at(x, a) = std::exp(view.log_p.at(x, a));
          view.ratio.at(x, a) = std::exp(view.log_p.at(x, a) - view.log_ref.at(x, a));
        }
      }
    }
    return view;
  }

  double margin(int x, int a, int b) const {
    const double log_gap =
        (log_p.at(x, a) - log_ref.at(x, a)) - (log_p.at(x, b) - log_ref.at(x, b));
    if (gamma == 0.0) return log_gap;
    return gamma * (ratio.at(x, a) - ratio.at(x, b)) + log_gap;
  }
};

struct TermEval {
  double value = 0.0;
  double dvalue_du = 0.0;
};

// Loss contribution and its derivative with respect to the raw margin u.
TermEval eval_term(const AlgorithmSpec& s, double u, const Term& t) {
  switch (s.family) {
    case LossFamily::kDpo: {
      const double m = s.beta * u;
      return {-log_sigmoid(m), -sigmoid(-m) * s.beta};
    }
    case LossFamily::kIpo: {
      const double d = u - 1.0 / (2.0 * s.beta);
      return {d * d, 2.0 * d};
    }
    case LossFamily::kRdpo:
    case LossFamily::kRdpoHetero:
    case LossFamily::kRdpoPenalized: {
      const double m = s.beta * u - (s.beta / s.beta1) * t.gap;
      TermEval e{-log_sigmoid(m), -sigmoid(-m) * s.beta};
      if (s.family == LossFamily::kRdpoPenalized) {
        const double h = u - t.gap / s.beta1;
        if (h - s.delta_max > 0.0) {
          e.value += s.lambda1 * (h - s.delta_max);
          e.dvalue_du += s.lambda1;
        }
        if (-h - s.delta_max > 0.0) {
          e.value += s.lambda2 * (-h - s.delta_max);
          e.dvalue_du -= s.lambda2;
        }
      }
      return e;
    }
    case LossFamily::kRipo: {
      const double m = s.beta * u - (s.beta / s.beta1) * t.gap - 0.5;
      return {m * m, 2.0 * m * s.beta};
    }
    case LossFamily::kDdpo: {
      const double m = t.gap - s.beta * u;
      return {m * m, -2.0 * m * s.beta};
    }
    case LossFamily::kMlRdpo: {
      const double m = s.beta * u;
      TermEval e{-log_sigmoid(m), -sigmoid(-m) * s.beta};
      if (t.has_gap) {
        const double d = t.gap - m;
        e.value += d * d / (2.0 * s.variance);
        e.dvalue_du -= d * s.beta / s.variance;
      }
      return e;
    }
    case LossFamily::kMlRdpoHetero: {
      const double m = s.beta * u;
      TermEval e;
      if (t.rank_part) {
        e.value += -log_sigmoid(m);
        e.dvalue_du += -sigmoid(-m) * s.beta;
      }
      if (t.rating_part) {
        const double d = t.gap - m;
        e.value += d * d;
        e.dvalue_du -= 2.0 * d * s.beta;
      }
      return e;
    }
    case LossFamily::kRpo: {
      // KL between Bern(sigmoid(u)) and Bern(sigmoid(gap)), evaluated in
      // logit space; the derivative collapses to sigma(u)sigma(-u)(u - gap).
      const double su = sigmoid(u);
      const double smu = sigmoid(-u);
      const double value = su * (log_sigmoid(u) - log_sigmoid(t.gap)) +
                           smu * (log_sigmoid(-u) - log_sigmoid(-t.gap));
      return {value, su * smu * (u - t.gap)};
    }
  }
  throw std::invalid_argument("loss: unknown family");
}

void check_example_indices(const PreferenceExample& e, int prompts, int responses) {
  if (e.prompt < 0 || e.prompt >= prompts || e.chosen < 0 || e.chosen >= responses ||
      e.rejected < 0 || e.rejected >= responses) {
    throw DimensionError("dataset: example index out of range");
  }
}

Dataset rated_subset(const Dataset& ds) {
  Dataset out;
  out.seed = ds.seed;
  for (const auto& e : ds.examples) {
    if (e.has_rating) out.examples.push_back(e);
  }
  return out;
}

// Re-keys every example's gap to the fitted table (marking all as rated).
Dataset with_fitted_gaps(const Dataset& ds, const RewardTable& fitted) {
  Dataset out = ds;
  for (auto& e : out.examples) {
    e.has_rating = true;
    e.rating_gap = fitted.gap(e.prompt, e.chosen, e.rejected);
  }
  return out;
}

std::vector<Term> empirical_terms(const AlgorithmSpec& spec, const Environment& env,
                                  const Dataset& ds) {
  std::vector<Term> terms;
  terms.reserve(ds.size());
  const bool need_all = spec.requires_full_ratings();
  const bool ml_split = spec.family == LossFamily::kMlRdpoHetero;
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    const auto& e = ds.examples[i];
    check_example_indices(e, env.prompts(), env.responses());
    if (need_all && !e.has_rating) {
      throw DataError("loss: missing rating for " + std::string(to_string(spec.family)) +
                      " at example " + std::to_string(i));
    }
    Term t;
    t.prompt = e.prompt;
    t.chosen = e.chosen;
    t.rejected = e.rejected;
    t.has_gap = e.has_rating;
    t.gap = e.rating_gap;
    if (ml_split) {
      t.rank_part = true;
      t.rating_part = e.has_rating;
    }
    terms.push_back(t);
  }
  return terms;
}

// Gaussian-expectation constant per unit weight for quadratic rating terms;
// families whose rating enters a non-quadratic loss have no closed form.
double gaussian_const_or_throw(const AlgorithmSpec& spec, double rating_variance) {
  switch (spec.family) {
    case LossFamily::kDpo:
    case LossFamily::kIpo:
      return 0.0;
    case LossFamily::kRipo: {
      const double k = spec.beta / spec.beta1;
      return k * k * rating_variance;
    }
    case LossFamily::kDdpo:
      return rating_variance;
    case LossFamily::kMlRdpo:
      return rating_variance / (2.0 * spec.variance);
    default:
      throw std::invalid_argument(
          std::string("population_loss: no closed-form Gaussian expectation for ") +
          to_string(spec.family));
  }
}

std::vector<Term> population_terms(const AlgorithmSpec& spec, const Environment& env,
                                   const RatingModel& rating) {
  env.validate();
  rating.validate();
  if (spec.family == LossFamily::kRdpoHetero || spec.family == LossFamily::kMlRdpoHetero) {
    throw std::invalid_argument("population_loss: heterogeneous families are empirical-only");
  }
  double add_const = 0.0;
  if (rating.mode == RatingModel::Mode::kGaussian) {
    add_const = gaussian_const_or_throw(spec, rating.variance);
  }
  const RewardTable* gap_source = &env.r_star;
  if (rating.mode == RatingModel::Mode::kBiased) {
    if (!rating.biased_table.values.same_shape(env.r_star.values)) {
      throw DimensionError("population_loss: biased rating table shape mismatch");
    }
    gap_source = &rating.biased_table;
  }

  const Table probs_data = env.pi_data.probs();
  std::vector<Term> terms;
  const int prompts = env.prompts();
  const int responses = env.responses();
  terms.reserve(static_cast<std::size_t>(prompts) * responses * responses);
  for (int x = 0; x < prompts; ++x) {
    const double nu = env.nu0.weights[static_cast<std::size_t>(x)];
    if (nu == 0.0) continue;
    for (int p = 0; p < responses; ++p) {
      for (int q = 0; q < responses; ++q) {
        // Ordered (winner, loser) cells: the draw (p,q) wins as (p,q) with
        // probability sigma(gap), and the mirrored draw (q,p) lands on the
        // same cell via z=0 with the same probability, hence the factor 2
        // (on the diagonal both z outcomes coincide, same factor).
        const double win = sigmoid(env.r_star.gap(x, p, q));
        const double weight = 2.0 * nu * probs_data.at(x, p) * probs_data.at(x, q) * win;
        if (weight == 0.0) continue;
        Term t;
        t.prompt = x;
        t.chosen = p;
        t.rejected = q;
        t.weight = weight;
        t.has_gap = true;
        t.gap = gap_source->gap(x, p, q);
        t.add_const = add_const;
        terms.push_back(t);
      }
    }
  }
  return terms;
}

double eval_loss_terms(const AlgorithmSpec& spec, const PolicyView& view,
                       const std::vector<Term>& terms) {
  CompensatedSum acc;
  for (const Term& t : terms) {
    const double u = view.margin(t.prompt, t.chosen, t.rejected);
    const TermEval e = eval_term(spec, u, t);
    acc.add(t.weight * (e.value + t.add_const));
  }
  return acc.value();
}

Table eval_grad_terms(const AlgorithmSpec& spec, const PolicyView& view,
                      const std::vector<Term>& terms, int prompts, int responses) {
  Table grad(prompts, responses, 0.0);
  if (view.gamma == 0.0) {
    for (const Term& t : terms) {
      const double u = view.margin(t.prompt, t.chosen, t.rejected);
      const double w = t.weight * eval_term(spec, u, t).dvalue_du;
      grad.at(t.prompt, t.chosen) += w;
      grad.at(t.prompt, t.rejected) -= w;
    }
    return grad;
  }
  // Mixed link: the ratio part of the margin couples every logit of the
  // prompt through the softmax; the coupling is rank-one per prompt.
  std::vector<double> shift(static_cast<std::size_t>(prompts), 0.0);
  for (const Term& t : terms) {
    const double u = view.margin(t.prompt, t.chosen, t.rejected);
    const double w = t.weight * eval_term(spec, u, t).dvalue_du;
    const double rc = view.ratio.at(t.prompt, t.chosen);
    const double rr = view.ratio.at(t.prompt, t.rejected);
    grad.at(t.prompt, t.chosen) += w * (view.gamma * rc + 1.0);
    grad.at(t.prompt, t.rejected) -= w * (view.gamma * rr + 1.0);
    shift[static_cast<std::size_t>(t.prompt)] += w * view.gamma * (rc - rr);
  }
  for (int x = 0; x < prompts; ++x) {
    const double s = shift[static_cast<std::size_t>(x)];
    if (s == 0.0) continue;
    for (int a = 0; a < responses; ++a) {
      grad.at(x, a) -= s * view.probs.at(x, a);
    }
  }
  return grad;
}

LossAndGrad eval_both_terms(const AlgorithmSpec& spec, const PolicyView& view,
                            const std::vector<Term>& terms, int prompts,
                            int responses) {
  LossAndGrad out;
  out.grad = Table(prompts, responses, 0.0);
  CompensatedSum acc;
  if (view.gamma == 0.0) {
    for (const Term& t : terms) {
      const double u = view.margin(t.prompt, t.chosen, t.rejected);
      const TermEval e = eval_term(spec, u, t);
      acc.add(t.weight * (e.value + t.add_const));
      const double w = t.weight * e.dvalue_du;
      out.grad.at(t.prompt, t.chosen) += w;
      out.grad.at(t.prompt, t.rejected) -= w;
    }
    out.value = acc.value();
    return out;
  }
  std::vector<double> shift(static_cast<std::size_t>(prompts), 0.0);
  for (const Term& t : terms) {
    const double u = view.margin(t.prompt, t.chosen, t.rejected);
    const TermEval e = eval_term(spec, u, t);
    acc.add(t.weight * (e.value + t.add_const));
    const double w = t.weight * e.dvalue_du;
    const double rc = view.ratio.at(t.prompt, t.chosen);
    const double rr = view.ratio.at(t.prompt, t.rejected);
    out.grad.at(t.prompt, t.chosen) += w * (view.gamma * rc + 1.0);
    out.grad.at(t.prompt, t.rejected) -= w * (view.gamma * rr + 1.0);
    shift[static_cast<std::size_t>(t.prompt)] += w * view.gamma * (rc - rr);
  }
  for (int x = 0; x < prompts; ++x) {
    const double s = shift[static_cast<std::size_t>(x)];
    if (s == 0.0) continue;
    for (int a = 0; a < responses; ++a) {
      out.grad.at(x, a) -= s * view.probs.at(x, a);
    }
  }
  out.value = acc.value();
  return out;
}

// RDPO_HETERO reduces to RDPO on the dataset re-keyed to fitted gaps.
struct Materialized {
  AlgorithmSpec spec;
  Dataset ds;
};

Materialized materialize(const AlgorithmSpec& spec, const Environment& env,
                         const Dataset& ds) {
  if (spec.family != LossFamily::kRdpoHetero) return {spec, ds};
  const RewardTable fitted = fit_rating_lsq(rated_subset(ds), env);
  AlgorithmSpec eff = spec;
  eff.family = LossFamily::kRdpo;
  return {eff, with_fitted_gaps(ds, fitted)};
}

}  // namespace

const char* to_string(LossFamily family) {
  switch (family) {
    case LossFamily::kDpo: return "DPO";
    case LossFamily::kIpo: return "IPO";
    case LossFamily::kRdpo: return "RDPO";
    case LossFamily::kRipo: return "RIPO";
    case LossFamily::kDdpo: return "DDPO";
    case LossFamily::kMlRdpo: return "MLRDPO";
    case LossFamily::kRpo: return "RPO";
    case LossFamily::kRdpoPenalized: return "RDPO_PENALIZED";
    case LossFamily::kRdpoHetero: return "RDPO_HETERO";
    case LossFamily::kMlRdpoHetero: return "MLRDPO_HETERO";
  }
  return "?";
}

LossFamily loss_family_from_string(std::string_view name) {
  if (name == "DPO") return LossFamily::kDpo;
  if (name == "IPO") return LossFamily::kIpo;
  if (name == "RDPO") return LossFamily::kRdpo;
  if (name == "RIPO") return LossFamily::kRipo;
  if (name == "DDPO") return LossFamily::kDdpo;
  if (name == "MLRDPO") return LossFamily::kMlRdpo;
  if (name == "RPO") return LossFamily::kRpo;
  if (name == "RDPO_PENALIZED") return LossFamily::kRdpoPenalized;
  if (name == "RDPO_HETERO") return LossFamily::kRdpoHetero;
  if (name == "MLRDPO_HETERO") return LossFamily::kMlRdpoHetero;
  throw SchemaError("family: unknown loss family '" + std::string(name) + "'");
}

bool AlgorithmSpec::uses_beta1() const {
  return family == LossFamily::kRdpo || family == LossFamily::kRipo ||
         family == LossFamily::kRdpoPenalized || family == LossFamily::kRdpoHetero;
}

bool AlgorithmSpec::uses_variance() const { return family == LossFamily::kMlRdpo; }

bool AlgorithmSpec::requires_full_ratings() const {
  return family == LossFamily::kRdpo || family == LossFamily::kRipo ||
         family == LossFamily::kDdpo || family == LossFamily::kRpo ||
         family == LossFamily::kRdpoPenalized;
}

bool AlgorithmSpec::is_rdpo_family() const { return uses_beta1(); }

double AlgorithmSpec::beta_eff() const {
  if (is_rdpo_family()) return beta * beta1 / (beta + beta1);
  return beta;
}

void AlgorithmSpec::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("AlgorithmSpec: beta must be positive");
  }
  if (uses_beta1() && (!(beta1 > 0.0) || !std::isfinite(beta1))) {
    throw std::invalid_argument("AlgorithmSpec: beta1 must be positive");
  }
  if (uses_variance() && (!(variance > 0.0) || !std::isfinite(variance))) {
    throw std::invalid_argument("AlgorithmSpec: variance must be positive");
  }
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
    throw std::invalid_argument("AlgorithmSpec: lambda1/lambda2 must be >= 0");
  }
  if (family == LossFamily::kRdpoPenalized &&
      (!(delta_max > 0.0) || !std::isfinite(delta_max))) {
    throw std::invalid_argument("AlgorithmSpec: delta_max must be positive");
  }
  divergence.validate();
}

double delta_theta(const SoftmaxPolicy& policy, const SoftmaxPolicy& ref,
                   int prompt, int a, int b, const DivergenceKind& kind) {
  if (!policy.logits().same_shape(ref.logits())) {
    throw DimensionError("delta_theta: policy shapes differ");
  }
  if (prompt < 0 || prompt >= policy.prompts() || a < 0 || a >= policy.responses() ||
      b < 0 || b >= policy.responses()) {
    throw DimensionError("delta_theta: index out of range");
  }
  const PolicyView view = PolicyView::make(policy, ref, kind);
  return view.margin(prompt, a, b);
}

std::pair<AlgorithmSpec, Dataset> effective_problem(const AlgorithmSpec& spec,
                                                    const Environment& env,
                                                    const Dataset& ds) {
  spec.validate();
  Materialized m = materialize(spec, env, ds);
  return {std::move(m.spec), std::move(m.ds)};
}

double loss(const AlgorithmSpec& spec, const SoftmaxPolicy& policy,
            const Environment& env, const Dataset& ds) {
  spec.validate();
  const Materialized m = materialize(spec, env, ds);
  const PolicyView view = PolicyView::make(policy, env.pi_ref, m.spec.divergence);
  return eval_loss_terms(m.spec, view, empirical_terms(m.spec, env, m.ds));
}

Table grad_loss(const AlgorithmSpec& spec, const SoftmaxPolicy& policy,
                const Environment& env, const Dataset& ds) {
  spec.validate();
  const Materialized m = materialize(spec, env, ds);
  const PolicyView view = PolicyView::make(policy, env.pi_ref, m.spec.divergence);
  return eval_grad_terms(m.spec, view, empirical_terms(m.spec, env, m.ds),
                         policy.prompts(), policy.responses());
}

RewardTable fit_rating_lsq(const Dataset& rated, const Environment& env) {
  const int prompts = env.prompts();
  const int responses = env.responses();

  // Per prompt: pairwise observation counts and the signed gap sums, from
  // which the normal equations are a graph Laplacian system.
  std::vector<Eigen::MatrixXd> counts(static_cast<std::size_t>(prompts),
                                      Eigen::MatrixXd::Zero(responses, responses));
  std::vector<Eigen::VectorXd> target(static_cast<std::size_t>(prompts),
                                      Eigen::VectorXd::Zero(responses));
  bool any = false;
  for (const auto& e : rated.examples) {
    if (!e.has_rating) continue;
    check_example_indices(e, prompts, responses);
    any = true;
    if (e.chosen == e.rejected) continue;  // self-pair carries no gap constraint
    auto& w = counts[static_cast<std::size_t>(e.prompt)];
    auto& b = target[static_cast<std::size_t>(e.prompt)];
    w(e.chosen, e.rejected) += 1.0;
    w(e.rejected, e.chosen) += 1.0;
    b(e.chosen) += e.rating_gap;
    b(e.rejected) -= e.rating_gap;
  }
  if (!any) throw DataError("fit_rating_lsq: no rated examples");

  RewardTable fitted;
  fitted.values = Table(prompts, responses, 0.0);
  for (int x = 0; x < prompts; ++x) {
    const auto& w = counts[static_cast<std::size_t>(x)];
    const auto& b = target[static_cast<std::size_t>(x)];

    // Connected components of the observation graph; the relative shift
    // between components is not identified and each is fit mean-zero.
    std::vector<int> component(static_cast<std::size_t>(responses), -1);
    int num_components = 0;
    for (int a = 0; a < responses; ++a) {
      if (component[static_cast<std::size_t>(a)] >= 0) continue;
      std::vector<int> stack{a};
      component[static_cast<std::size_t>(a)] = num_components;
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        for (int c = 0; c < responses; ++c) {
          if (w(cur, c) > 0.0 && component[static_cast<std::size_t>(c)] < 0) {
            component[static_cast<std::size_t>(c)] = num_components;
            stack.push_back(c);
          }
        }
      }
      ++num_components;
    }

    for (int comp = 0; comp < num_components; ++comp) {
      std::vector<int> members;
      for (int a = 0; a < responses; ++a) {
        if (component[static_cast<std::size_t>(a)] == comp) members.push_back(a);
      }
      const auto size = static_cast<int>(members.size());
      if (size < 2) continue;  // isolated response stays at 0
      Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(size, size);
      Eigen::VectorXd rhs(size);
      for (int i = 0; i < size; ++i) {
        rhs(i) = b(members[static_cast<std::size_t>(i)]);
        double degree = 0.0;
        for (int j = 0; j < size; ++j) {
          const double wij =
              w(members[static_cast<std::size_t>(i)], members[static_cast<std::size_t>(j)]);
          lap(i, j) = -wij;
          degree += wij;
        }
        lap(i, i) += degree;
      }
      // Pinning the component mean to zero makes the system positive
      // definite; rhs is orthogonal to the all-ones null vector.
      lap.array() += 1.0 / static_cast<double>(size);
      const Eigen::VectorXd sol = lap.ldlt().solve(rhs);
      for (int i = 0; i < size; ++i) {
        fitted.values.at(x, members[static_cast<std::size_t>(i)]) = sol(i);
      }
    }
  }

  double lo = fitted.values.data()[0];
  double hi = lo;
  for (double v : fitted.values.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  fitted.r_min = lo;
  fitted.r_max = hi;
  return fitted;
}

double loss_hetero(const AlgorithmSpec& spec, const SoftmaxPolicy& policy,
                   const Environment& env, const Dataset& ranked,
                   const Dataset& rated) {
  spec.validate();
  if (spec.family == LossFamily::kRdpoHetero) {
    const RewardTable fitted = fit_rating_lsq(rated, env);
    AlgorithmSpec eff = spec;
    eff.family = LossFamily::kRdpo;
    const PolicyView view = PolicyView::make(policy, env.pi_ref, eff.divergence);
    return eval_loss_terms(eff, view,
                           empirical_terms(eff, env, with_fitted_gaps(ranked, fitted)));
  }
  if (spec.family != LossFamily::kMlRdpoHetero) {
    throw std::invalid_argument("loss_hetero: spec must be a heterogeneous family");
  }
  std::vector<Term> terms;
  terms.reserve(ranked.size() + rated.size());
  for (std::size_t i = 0; i < ranked.examples.size(); ++i) {
    const auto& e = ranked.examples[i];
    check_example_indices(e, env.prompts(), env.responses());
    Term t;
    t.prompt = e.prompt;
    t.chosen = e.chosen;
    t.rejected = e.rejected;
    t.rank_part = true;
    t.rating_part = false;
    terms.push_back(t);
  }
  for (std::size_t i = 0; i < rated.examples.size(); ++i) {
    const auto& e = rated.examples[i];
    check_example_indices(e, env.prompts(), env.responses());
    if (!e.has_rating) {
      throw DataError("loss_hetero: unrated example " + std::to_string(i) +
                      " in the rating dataset");
    }
    Term t;
    t.prompt = e.prompt;
    t.chosen = e.chosen;
    t.rejected = e.rejected;
    t.has_gap = true;
    t.gap = e.rating_gap;
    t.rank_part = false;
    t.rating_part = true;
    terms.push_back(t);
  }
  const PolicyView view = PolicyView::make(policy, env.pi_ref, spec.divergence);
  return eval_loss_terms(spec, view, terms);
}

LossAndGrad loss_and_grad(const AlgorithmSpec& spec, const SoftmaxPolicy& policy,
                          const Environment& env, const Dataset& ds) {
  spec.validate();
  const Materialized m = materialize(spec, env, ds);
  const PolicyView view = PolicyView::make(policy, env.pi_ref, m.spec.divergence);
  return eval_both_terms(m.spec, view, empirical_terms(m.spec, env, m.ds),
                         policy.prompts(), policy.responses());
}

LossAndGrad population_loss_and_grad(const AlgorithmSpec& spec,
                                     const SoftmaxPolicy& policy,
                                     const Environment& env,
                                     const RatingModel& rating) {
  spec.validate();
  const PolicyView view = PolicyView::make(policy, env.pi_ref, spec.divergence);
  return eval_both_terms(spec, view, population_terms(spec, env, rating),
                         policy.prompts(), policy.responses());
}

double population_loss(const AlgorithmSpec& spec, const SoftmaxPolicy& policy,
                       const Environment& env, const RatingModel& rating) {
  spec.validate();
  const PolicyView view = PolicyView::make(policy, env.pi_ref, spec.divergence);
  return eval_loss_terms(spec, view, population_terms(spec, env, rating));
}

Table grad_population_loss(const AlgorithmSpec& spec, const SoftmaxPolicy& policy,
                           const Environment& env, const RatingModel& rating) {
  spec.validate();
  const PolicyView view = PolicyView::make(policy, env.pi_ref, spec.divergence);
  return eval_grad_terms(spec, view, population_terms(spec, env, rating),
                         policy.prompts(), policy.responses());
}

}  // namespace ratelab
