#pragma once

#include <optional>

#include "dicemax/core.hpp"
#include "dicemax/simplex_integration.hpp"

namespace dicemax {

/// Numerical settings shared by every integral-backed posterior.
struct EvalOptions {
  Integrator integrator = Integrator::Deterministic;
  IntegrationBudget budget{};
  /// Added to every log-weight; results must not depend on it.
  double log_weight_offset = 0.0;
};

/// Both throw kinds from one shared integration (the numerator and denominator
/// integrals use the same evaluation points).
struct PosteriorPair {
  PosteriorResult old_throw;
  PosteriorResult new_throw;
};

/// Multiplicity model at finite N, by integration over the simplex.
/// Throws ContradictoryData for an empty constraint set.
PosteriorResult multiplicity_posterior(int n, const Average& a, double L, Throw throw_kind,
                                       const EvalOptions& options = {});
PosteriorResult generalized_multiplicity_posterior(int n, const Average& a, double L, const Distribution& m,
                                                   Throw throw_kind, const EvalOptions& options = {});
PosteriorPair multiplicity_posterior_pair(int n, const Average& a, double L, const std::optional<Distribution>& m,
                                          const EvalOptions& options = {});

/// Large-N Johnson limit: integral over the constraint slice of prod f_l^(K m_l' - 1)
/// (m' = 1 when m is absent). Old and new throws coincide.
PosteriorResult johnson_large_n(const Average& a, double K, const EvalOptions& options = {},
                                const std::optional<Distribution>& m = std::nullopt);

/// Large-N multiplicity limit: integral over the constraint slice of
/// prod m_l^(L f_l) / (L f_l)!. Old and new throws coincide.
PosteriorResult multiplicity_large_n(const Average& a, double L, const EvalOptions& options = {},
                                     const std::optional<Distribution>& m = std::nullopt);

/// Evaluates any query, routing large-N and large-parameter regimes to their
/// limits. Throws std::invalid_argument for ambiguous regime descriptions.
PosteriorResult asymptotic_dispatch(const Query& query, const EvalOptions& options = {});

}  // namespace dicemax
