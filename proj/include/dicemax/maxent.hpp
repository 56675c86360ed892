#pragma once

#include <optional>

#include "dicemax/core.hpp"

namespace dicemax {

struct MaxentSolution {
  Distribution distribution;
  /// Multiplier of the mean constraint. Tagged infinite at the vertices.
  ExtendedReal lambda;
  /// Multiplier of the normalization constraint, where the solver has one.
  std::optional<double> mu;
  /// Shannon or Burg entropy (maximized) or D(f, m) (minimized), in nats.
  ExtendedReal functional_value;
  double normalization_defect;
  double mean_defect;
  /// a is 1 or 6: the constraint set is a single vertex.
  bool degenerate = false;
  /// The multiplier left its bracket; the nearest vertex was returned.
  bool boundary = false;
};

/// Maximizes Shannon entropy subject to v . f = a. Solution f_i ~ exp(lambda i).
/// Throws std::domain_error for a outside [1, 6] (enforced by Average).
MaxentSolution maxent_shannon(const Average& a);

/// Maximizes Burg entropy sum ln f_i subject to v . f = a.
/// Solution f_i = 1 / (mu + lambda i).
MaxentSolution maxent_burg(const Average& a);

/// Maximizes sum w_i ln f_i (weighted Burg), f_i = w_i / (mu + lambda i).
/// This is the large-N, large-K limit of the generalized Johnson model.
MaxentSolution maxent_weighted_burg(const Average& a, const Distribution& w);

/// Minimizes D(f, m) subject to v . f = a. Solution f_i ~ m_i exp(lambda i).
MaxentSolution min_kl(const Average& a, const Distribution& m);

/// Mean of the tilted family f_i ~ base_i exp(lambda i). Strictly increasing in
/// lambda for strictly positive base.
double tilted_mean(double lambda, const Probs& base);

}  // namespace dicemax
