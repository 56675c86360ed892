#include "dicemax/exact_models.hpp"

#include <cmath>
#include <stdexcept>

#include "dicemax/numeric.hpp"

namespace dicemax {

namespace {

ConstraintSet nonempty_set(int n, const Average& a) {
  ConstraintSet set = enumerate_constrained_frequencies(n, a);
  if (set.empty()) {
    throw ContradictoryData("undefined (contradictory data): no outcome of " + std::to_string(n) +
                            " throws has average " + a.label());
  }
  return set;
}

// Weighted mean over members of per-member rows.
template <typename RowFn>
Probs weighted_rows(const WeightedFrequencySum& ws, RowFn row) {
  const std::vector<double> w = ws.normalized_weights();
  Probs out{};
  for (std::size_t k = 0; k < w.size(); ++k) {
    const Probs r = row(ws.constraint_set.members[k]);
    for (int i = 0; i < kFaces; ++i) out[i] += w[k] * r[i];
  }
  return out;
}

Probs old_row(const FrequencyVector& nv) {
  Probs r;
  for (int i = 0; i < kFaces; ++i) r[i] = static_cast<double>(nv[i]) / nv.total();
  return r;
}

}  // namespace

std::vector<double> WeightedFrequencySum::normalized_weights() const {
  const double z = log_sum_exp(log_weights);
  std::vector<double> w(log_weights.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(log_weights[k] - z);
  return w;
}

double conditional_old_given_frequency(const FrequencyVector& nv, int face) {
  if (nv.total() < 1) throw std::domain_error("conditional_old_given_frequency: N must be >= 1");
  if (face < 1 || face > kFaces) throw std::domain_error("conditional_old_given_frequency: bad face");
  return static_cast<double>(nv[face - 1]) / nv.total();
}

WeightedFrequencySum fair_weights(const ConstraintSet& set) {
  WeightedFrequencySum ws{set, {}};
  ws.log_weights.reserve(set.members.size());
  for (const auto& nv : set.members) ws.log_weights.push_back(log_multinomial(nv));
  return ws;
}

WeightedFrequencySum johnson_weights(const ConstraintSet& set, const Probs& pseudo_counts) {
  WeightedFrequencySum ws{set, {}};
  ws.log_weights.reserve(set.members.size());
  for (const auto& nv : set.members) {
    double lw = 0.0;
    for (int l = 0; l < kFaces; ++l) {
      // (N_l + c - 1)! / N_l! = Gamma(N_l + c) / Gamma(N_l + 1)
      lw += std::lgamma(nv[l] + pseudo_counts[l]) - log_gamma_factorial(nv[l]);
    }
    ws.log_weights.push_back(lw);
  }
  return ws;
}

PosteriorResult fair_posterior(int n, const Average& a, Throw throw_kind) {
  if (n < 1) throw std::domain_error("fair_posterior: N must be >= 1");
  const ConstraintSet set = nonempty_set(n, a);
  if (throw_kind == Throw::New) return PosteriorResult::make(Distribution::uniform(), Method::ClosedForm);
  const Probs p = weighted_rows(fair_weights(set), old_row);
  return PosteriorResult::make(Distribution::from_weights(p), Method::ClosedForm);
}

namespace {

PosteriorResult johnson_impl(int n, const Average& a, double K, const Probs& pseudo, Throw throw_kind) {
  const ConstraintSet set = nonempty_set(n, a);
  const WeightedFrequencySum ws = johnson_weights(set, pseudo);
  Probs p;
  if (throw_kind == Throw::Old) {
    p = weighted_rows(ws, old_row);
  } else {
    p = weighted_rows(ws, [&](const FrequencyVector& nv) {
      Probs r;
      for (int i = 0; i < kFaces; ++i) r[i] = (nv[i] + pseudo[i]) / (n + K);
      return r;
    });
  }
  return PosteriorResult::make(Distribution::from_weights(p), Method::ClosedForm);
}

}  // namespace

PosteriorResult johnson_posterior(int n, const Average& a, double K, Throw throw_kind) {
  if (n < 1) throw std::domain_error("johnson_posterior: N must be >= 1");
  if (!(K > 0.0)) throw std::domain_error("johnson_posterior: K must be > 0");
  Probs pseudo;
  pseudo.fill(K);
  return johnson_impl(n, a, kFaces * K, pseudo, throw_kind);
}

PosteriorResult generalized_johnson_posterior(int n, const Average& a, double K, const Distribution& m,
                                              Throw throw_kind) {
  if (n < 0) throw std::domain_error("generalized_johnson_posterior: N must be >= 0");
  if (!(K > 0.0)) throw std::domain_error("generalized_johnson_posterior: K must be > 0");
  if (!m.strictly_positive()) throw std::domain_error("generalized_johnson_posterior: m must be > 0");
  if (n == 0) return PosteriorResult::make(m, Method::ClosedForm);
  Probs pseudo;
  for (int i = 0; i < kFaces; ++i) pseudo[i] = K * m[i];
  return johnson_impl(n, a, K, pseudo, throw_kind);
}


}  // namespace dicemax
