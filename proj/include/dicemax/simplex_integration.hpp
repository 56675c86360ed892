#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "dicemax/core.hpp"

namespace dicemax {

/// The average is 1 or 6, so the constraint slice is a single vertex.
class DegeneratePolytope : public std::domain_error {
 public:
  explicit DegeneratePolytope(const std::string& what) : std::domain_error(what) {}
};

/// Deterministic random stream; stream ids split one seed into independent
/// sequences.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);
  std::mt19937_64& engine() { return engine_; }
  double standard_exponential() { return exponential_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::exponential_distribution<double> exponential_{1.0};
};

/// i.i.d. points uniform w.r.t. the flat measure on the simplex (normalized
/// independent standard-exponential spacings).
std::vector<Distribution> sample_simplex_uniform(RngStream& rng, std::int64_t count);

/// ln of  int_Delta prod p_l^(b_l - 1) dp = prod Gamma(b_l) / Gamma(sum b_l)
/// over the unnormalized Lebesgue measure. Throws std::domain_error unless all b_l > 0.
double dirichlet_beta_integral(const Probs& b);

/// Intersection of the simplex with the hyperplane v . f = a, triangulated.
struct ConstraintPolytope {
  Average average{1};
  std::vector<Distribution> vertices;
  /// vertices first, then auxiliary centroids introduced by the fan triangulation.
  std::vector<Probs> points;
  std::vector<std::array<int, 5>> simplices;
  /// 4-volume of each simplex over the total; sums to 1.
  std::vector<double> relative_volumes;
};

/// Throws DegeneratePolytope for a = 1 or a = 6.
ConstraintPolytope build_constraint_polytope(const Average& a);

// ---------------------------------------------------------------------------
// Integration

/// Writes ln of each integrand component at `point`. -inf means zero weight.
using LogIntegrand = std::function<void(const Probs& point, std::span<double> log_values)>;
/// Scalar log-integrand.
using ScalarLogIntegrand = std::function<double(const Distribution& point)>;

enum class Integrator { MonteCarlo, Deterministic };

struct IntegrationBudget {
  std::int64_t max_evaluations = 1'000'000;
  double relative_tolerance = 1e-4;
  std::uint64_t seed = 20090716;
  /// Monte Carlo streams per stratum; fixed so results do not depend on threads.
  int streams = 16;
  /// Worker threads (0: hardware concurrency).
  int threads = 0;
};

/// Integral w.r.t. the flat measure normalized to unit total mass.
struct QuadratureEstimate {
  double value = 0.0;
  /// Monte Carlo standard error; exactly 0 for the deterministic integrator.
  double std_error = 0.0;
  /// Difference of embedded rules (deterministic only).
  double error_indicator = 0.0;
  std::int64_t evaluations = 0;
  bool converged = true;
};

/// Requested tolerance not reached within the evaluation budget.
class BudgetExhausted : public std::runtime_error {
 public:
  explicit BudgetExhausted(QuadratureEstimate estimate)
      : std::runtime_error("integration budget exhausted"), estimate_(estimate) {}
  const QuadratureEstimate& estimate() const { return estimate_; }

 private:
  QuadratureEstimate estimate_;
};

/// A simplex with `corners.size() - 1` dimensions and its share of the
/// normalized measure.
struct WeightedSimplex {
  std::vector<Probs> corners;
  double weight;
};

/// Region of integration: the full simplex, or a triangulated polytope.
std::vector<WeightedSimplex> simplex_region();
std::vector<WeightedSimplex> polytope_region(const ConstraintPolytope& poly);

/// Component integrals are value[c] * exp(log_scale).
struct VectorEstimate {
  double log_scale = 0.0;
  std::vector<double> value;
  /// MC standard errors or deterministic error indicators, same scaling.
  std::vector<double> error;
  /// Deterministic only: error indicator of value[c] / value[0], already a ratio.
  std::vector<double> ratio_error;
  /// MC covariance of each component with component 0 (zero otherwise).
  std::vector<double> covariance_with_first;
  std::int64_t evaluations = 0;
  bool converged = true;
  Integrator integrator = Integrator::MonteCarlo;

  /// value[c] / value[0] with a first-order error estimate.
  std::pair<double, double> ratio(std::size_t c) const;
};

VectorEstimate integrate_vector(const std::vector<WeightedSimplex>& region, const LogIntegrand& integrand,
                                std::size_t components, Integrator integrator,
                                const IntegrationBudget& budget);

QuadratureEstimate integrate_simplex(const ScalarLogIntegrand& integrand, Integrator integrator,
                                     const IntegrationBudget& budget);
QuadratureEstimate integrate_polytope(const ConstraintPolytope& poly, const ScalarLogIntegrand& integrand,
                                      Integrator integrator, const IntegrationBudget& budget);

/// Throws BudgetExhausted unless the estimate converged.
const QuadratureEstimate& require_converged(const QuadratureEstimate& estimate);

/// Grundmann-Moeller rule of degree 2s+1 on an n-simplex: barycentric points
/// and weights normalized so that sum of weights is 1 (unit-mass measure).
struct SimplexRule {
  std::vector<std::vector<double>> points;
  std::vector<double> weights;
  /// Weights of the embedded degree 2s-1 rule on the same points (0 where unused).
  std::vector<double> lower_weights;
};

SimplexRule grundmann_moeller_rule(int dimension, int s);

}  // namespace dicemax
