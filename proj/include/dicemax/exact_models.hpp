#pragma once

#include <vector>

#include "dicemax/combinatorics.hpp"
#include "dicemax/core.hpp"

namespace dicemax {

/// Constraint set with one log-weight per member, proportional to the
/// model's plausibility of that frequency vector. Common factors are dropped.
struct WeightedFrequencySum {
  ConstraintSet constraint_set;
  std::vector<double> log_weights;

  /// Member weights normalized to sum 1, combined by log-sum-exp in member order.
  std::vector<double> normalized_weights() const;
};

/// P(old throw shows `face` | frequencies) = N_face / N. `face` is 1-based.
double conditional_old_given_frequency(const FrequencyVector& nv, int face);

/// Fair-throw model. New throws are uniform for every feasible a.
/// Throws ContradictoryData when no frequency vector matches (N, a).
PosteriorResult fair_posterior(int n, const Average& a, Throw throw_kind);

/// Johnson (symmetric Dirichlet) model with K pseudo-counts per face.
PosteriorResult johnson_posterior(int n, const Average& a, double K, Throw throw_kind);

/// Johnson model with pseudo-counts K*m_i. N = 0 is accepted and yields the
/// prior predictive m (for either throw kind).
PosteriorResult generalized_johnson_posterior(int n, const Average& a, double K,
                                              const Distribution& m, Throw throw_kind);

/// Log-weights used by the fair-throw model: ln N!/prod N_l! (6^-N cancels).
WeightedFrequencySum fair_weights(const ConstraintSet& set);
/// Log-weights prod (N_l + K m_l - 1)! / N_l!, with K m_l = K when m is absent.
WeightedFrequencySum johnson_weights(const ConstraintSet& set, const Probs& pseudo_counts);

}  // namespace dicemax
