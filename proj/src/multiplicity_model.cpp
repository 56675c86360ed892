#include "dicemax/multiplicity_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dicemax/combinatorics.hpp"
#include "dicemax/exact_models.hpp"
#include "dicemax/maxent.hpp"
#include "dicemax/numeric.hpp"

namespace dicemax {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Method method_of(Integrator integrator) {
  return integrator == Integrator::MonteCarlo ? Method::MonteCarlo : Method::DeterministicQuad;
}

// Converts component ratios value[first + i] / value[0] into a posterior row.
PosteriorResult row_from(const VectorEstimate& est, std::size_t first) {
  Probs p, err;
  double sum = 0.0;
  for (int i = 0; i < kFaces; ++i) {
    const auto [r, e] = est.ratio(first + static_cast<std::size_t>(i));
    p[i] = std::max(r, 0.0);
    err[i] = e;
    sum += p[i];
  }
  PosteriorResult res = PosteriorResult::make(Distribution::from_weights(p), method_of(est.integrator), err);
  res.normalization_defect = std::abs(sum - 1.0);
  res.evaluations = est.evaluations;
  return res;
}

Probs log_prior_mean(const std::optional<Distribution>& m) {
  Probs lm{};
  if (m) {
    if (!m->strictly_positive()) throw std::domain_error("prior mean m must have all entries > 0");
    for (int i = 0; i < kFaces; ++i) lm[i] = std::log((*m)[i]);
  }
  return lm;
}

}  // namespace

PosteriorPair multiplicity_posterior_pair(int n, const Average& a, double L, const std::optional<Distribution>& m,
                                          const EvalOptions& options) {
  if (n < 1) throw std::domain_error("multiplicity_posterior: N must be >= 1");
  if (!(L >= 1.0)) throw std::domain_error("multiplicity_posterior: L must be >= 1");
  const ConstraintSet set = enumerate_constrained_frequencies(n, a);
  if (set.empty()) {
    throw ContradictoryData("undefined (contradictory data): no outcome of " + std::to_string(n) +
                            " throws has average " + a.label());
  }
  const Probs log_m = log_prior_mean(m);
  std::vector<double> log_mult;
  for (const auto& nv : set.members) log_mult.push_back(log_multinomial(nv));

  // Components: 0 = sum_N w, 1..6 = sum_N w N_i/N (old), 7..12 = p_i sum_N w (new), with
  //   ln w = ln N!/prod N_l! + sum_l [N_l ln p_l + L p_l ln m_l - ln (L p_l)!].
  // L!, c(L) and c(L, m) are common to numerator and denominator and dropped.
  const double offset = options.log_weight_offset;
  const std::size_t members = set.members.size();
  LogIntegrand integrand = [&, members](const Probs& p, std::span<double> out) {
    Probs lp;
    double prior = offset;
    for (int l = 0; l < kFaces; ++l) {
      lp[l] = p[l] > 0.0 ? std::log(p[l]) : kNegInf;
      prior += L * p[l] * log_m[l] - log_gamma_factorial(L * p[l]);
    }
    double terms[1024];
    std::vector<double> heap_terms;
    double* t = terms;
    if (members > 1024) {
      heap_terms.resize(members);
      t = heap_terms.data();
    }
    double hi = kNegInf;
    for (std::size_t k = 0; k < members; ++k) {
      double lw = log_mult[k];
      const auto& c = set.members[k].counts();
      for (int l = 0; l < kFaces; ++l)
        if (c[l] > 0) lw += c[l] * lp[l];
      t[k] = lw;
      hi = std::max(hi, lw);
    }
    if (hi == kNegInf) {
      std::fill(out.begin(), out.end(), kNegInf);
      return;
    }
    double total = 0.0;
    Probs face{};
    for (std::size_t k = 0; k < members; ++k) {
      const double e = std::exp(t[k] - hi);
      total += e;
      const auto& c = set.members[k].counts();
      for (int l = 0; l < kFaces; ++l) face[l] += e * c[l];
    }
    const double log_total = hi + std::log(total) + prior;
    out[0] = log_total;
    for (int l = 0; l < kFaces; ++l) {
      out[1 + l] = face[l] > 0.0 ? hi + std::log(face[l] / n) + prior : kNegInf;
      out[7 + l] = lp[l] + log_total;
    }
  };

  const VectorEstimate est = integrate_vector(simplex_region(), integrand, 13, options.integrator, options.budget);
  return {row_from(est, 1), row_from(est, 7)};
}

PosteriorResult multiplicity_posterior(int n, const Average& a, double L, Throw throw_kind,
                                       const EvalOptions& options) {
  auto pair = multiplicity_posterior_pair(n, a, L, std::nullopt, options);
  return throw_kind == Throw::Old ? pair.old_throw : pair.new_throw;
}

PosteriorResult generalized_multiplicity_posterior(int n, const Average& a, double L, const Distribution& m,
                                                   Throw throw_kind, const EvalOptions& options) {
  auto pair = multiplicity_posterior_pair(n, a, L, m, options);
  return throw_kind == Throw::Old ? pair.old_throw : pair.new_throw;
}

namespace {

using SliceDensity = std::function<double(const Probs&)>;

// Shared path for both large-N limits: posterior mean of f over the slice.
PosteriorResult slice_mean(const Average& a, const SliceDensity& log_density, const EvalOptions& options) {
  if (a.is_vertex()) {
    return PosteriorResult::make(Distribution::vertex(a.value() > 3.5 ? kFaces : 1), Method::AnalyticLimit);
  }
  const ConstraintPolytope poly = build_constraint_polytope(a);
  const double offset = options.log_weight_offset;
  LogIntegrand integrand = [&](const Probs& f, std::span<double> out) {
    const double g = log_density(f) + offset;
    out[0] = g;
    for (int i = 0; i < kFaces; ++i) out[1 + i] = f[i] > 0.0 ? std::log(f[i]) + g : kNegInf;
  };
  const VectorEstimate est = integrate_vector(polytope_region(poly), integrand, 7, options.integrator, options.budget);
  return row_from(est, 1);
}

}  // namespace

PosteriorResult johnson_large_n(const Average& a, double K, const EvalOptions& options,
                                const std::optional<Distribution>& m) {
  if (!(K > 0.0)) throw std::domain_error("johnson_large_n: K must be > 0");
  Probs exponent;
  for (int i = 0; i < kFaces; ++i) exponent[i] = (m ? K * (*m)[i] : K) - 1.0;
  if (m && !m->strictly_positive()) throw std::domain_error("prior mean m must have all entries > 0");
  return slice_mean(
      a,
      [exponent](const Probs& f) {
        double g = 0.0;
        for (int l = 0; l < kFaces; ++l) {
          if (exponent[l] == 0.0) continue;
          if (f[l] <= 0.0) return exponent[l] > 0.0 ? kNegInf : std::numeric_limits<double>::infinity();
          g += exponent[l] * std::log(f[l]);
        }
        return g;
      },
      options);
}

PosteriorResult multiplicity_large_n(const Average& a, double L, const EvalOptions& options,
                                     const std::optional<Distribution>& m) {
  if (!(L >= 1.0)) throw std::domain_error("multiplicity_large_n: L must be >= 1");
  const Probs log_m = log_prior_mean(m);
  return slice_mean(
      a,
      [L, log_m](const Probs& f) {
        double g = 0.0;
        for (int l = 0; l < kFaces; ++l) g += L * f[l] * log_m[l] - log_gamma_factorial(L * f[l]);
        return g;
      },
      options);
}

// ---------------------------------------------------------------------------

namespace {

PosteriorResult from_maxent(const MaxentSolution& s) {
  return PosteriorResult::make(s.distribution, Method::AnalyticLimit);
}

// Fair-throw behaviour: old throws as under the fair model, new throws uniform.
PosteriorResult fair_like(const Query& q) {
  if (q.throw_kind == Throw::New) {
    if (const auto* exact = std::get_if<Exact>(&q.regime)) {
      // Still reject contradictory data.
      if (enumerate_constrained_frequencies(exact->n, q.average).empty()) {
        throw ContradictoryData("undefined (contradictory data)");
      }
    }
    return PosteriorResult::make(Distribution::uniform(), Method::AnalyticLimit);
  }
  if (const auto* exact = std::get_if<Exact>(&q.regime)) {
    auto r = fair_posterior(exact->n, q.average, Throw::Old);
    r.method = Method::AnalyticLimit;
    return r;
  }
  return from_maxent(maxent_shannon(q.average));
}

const std::optional<Distribution>& prior_mean(const ModelSpec& model) {
  static const std::optional<Distribution> none;
  if (const auto* j = std::get_if<Johnson>(&model)) return j->m;
  if (const auto* mu = std::get_if<Multiplicity>(&model)) return mu->m;
  return none;
}

}  // namespace

PosteriorResult asymptotic_dispatch(const Query& q, const EvalOptions& options) {
  const bool large_n = std::holds_alternative<LargeN>(q.regime);
  const bool fair = std::holds_alternative<FairThrow>(q.model);

  if (q.large_parameter && !fair) {
    const ParameterLimit limit = *q.large_parameter;
    if (large_n && limit == ParameterLimit::Unspecified) {
      throw std::invalid_argument("ambiguous regime: N and the model parameter are both large; "
                                  "state whether N/parameter is small or large");
    }
    if (!large_n && limit == ParameterLimit::DataMoreThanParameter) {
      throw std::invalid_argument("ambiguous regime: finite N cannot exceed a large parameter");
    }
    if (limit != ParameterLimit::DataMoreThanParameter) return fair_like(q);
    // N much larger than a large parameter: maximum-entropy limits.
    if (q.average.is_vertex()) return from_maxent(maxent_shannon(q.average));
    const auto& m = prior_mean(q.model);
    if (std::holds_alternative<Johnson>(q.model)) {
      return from_maxent(m ? maxent_weighted_burg(q.average, *m) : maxent_burg(q.average));
    }
    return from_maxent(m ? min_kl(q.average, *m) : maxent_shannon(q.average));
  }

  if (fair) {
    if (large_n) return fair_like(q);
    return fair_posterior(std::get<Exact>(q.regime).n, q.average, q.throw_kind);
  }

  if (const auto* j = std::get_if<Johnson>(&q.model)) {
    if (large_n) return johnson_large_n(q.average, j->K, options, j->m);
    const int n = std::get<Exact>(q.regime).n;
    return j->m ? generalized_johnson_posterior(n, q.average, j->K, *j->m, q.throw_kind)
                : johnson_posterior(n, q.average, j->K, q.throw_kind);
  }

  const auto& mu = std::get<Multiplicity>(q.model);
  if (large_n) return multiplicity_large_n(q.average, mu.L, options, mu.m);
  const auto pair = multiplicity_posterior_pair(std::get<Exact>(q.regime).n, q.average, mu.L, mu.m, options);
  return q.throw_kind == Throw::Old ? pair.old_throw : pair.new_throw;
}

}  // namespace dicemax
