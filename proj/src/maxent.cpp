#include "dicemax/maxent.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dicemax {

namespace {

constexpr double kLambdaBracket = 60.0;
constexpr double kResidualTolerance = 1e-13;
constexpr int kMaxIterations = 200;

Probs tilted(double lambda, const Probs& log_base) {
  double hi = -std::numeric_limits<double>::infinity();
  Probs e;
  for (int i = 0; i < kFaces; ++i) {
    e[i] = log_base[i] + lambda * kFaceValues[i];
    hi = std::max(hi, e[i]);
  }
  double z = 0.0;
  for (double& x : e) z += (x = std::exp(x - hi));
  for (double& x : e) x /= z;
  return e;
}

void fill_defects(MaxentSolution& s, const Average& a) {
  double sum = 0.0;
  for (double p : s.distribution.probs()) sum += p;
  s.normalization_defect = std::abs(sum - 1.0);
  s.mean_defect = std::abs(s.distribution.mean() - a.value());
}

MaxentSolution vertex_solution(const Average& a, bool degenerate) {
  const bool top = a.value() > 3.5;
  MaxentSolution s{Distribution::vertex(top ? kFaces : 1),
                   top ? ExtendedReal::plus_infinity() : ExtendedReal::minus_infinity(),
                   std::nullopt,
                   ExtendedReal(0.0),
                   0.0,
                   0.0,
                   degenerate,
                   !degenerate};
  fill_defects(s, a);
  return s;
}

// Solves mean(lambda) = a for f ~ exp(log_base + lambda v) by bracketed Newton
// with bisection fallback. Returns nullopt when the root leaves the bracket.
std::optional<std::pair<double, Distribution>> solve_tilted(const Average& a, const Probs& log_base) {
  const double target = a.value();
  double lo = -kLambdaBracket, hi = kLambdaBracket;
  auto mean_of = [&](double lambda) {
    const Probs f = tilted(lambda, log_base);
    double m = 0.0, m2 = 0.0;
    for (int i = 0; i < kFaces; ++i) {
      m += kFaceValues[i] * f[i];
      m2 += kFaceValues[i] * kFaceValues[i] * f[i];
    }
    return std::pair{m, m2 - m * m};
  };
  if (mean_of(lo).first > target || mean_of(hi).first < target) return std::nullopt;

  double lambda = 0.0;
  for (int it = 0; it < kMaxIterations; ++it) {
    const auto [m, var] = mean_of(lambda);
    const double g = m - target;
    if (std::abs(g) <= kResidualTolerance) break;
    if (g < 0.0) lo = lambda; else hi = lambda;
    double next = var > 0.0 ? lambda - g / var : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(lambda))) break;
    lambda = next;
  }
  return std::pair{lambda, Distribution::from_weights(tilted(lambda, log_base))};
}

}  // namespace

double tilted_mean(double lambda, const Probs& base) {
  Probs log_base;
  for (int i = 0; i < kFaces; ++i) log_base[i] = std::log(base[i]);
  const Probs f = tilted(lambda, log_base);
  double m = 0.0;
  for (int i = 0; i < kFaces; ++i) m += kFaceValues[i] * f[i];
  return m;
}

MaxentSolution maxent_shannon(const Average& a) {
  if (a.is_vertex()) return vertex_solution(a, true);
  if (a == Average(7, 2)) {
    // Symmetric point: lambda = 0 exactly, no rounding from the iteration.
    const Distribution u = Distribution::uniform();
    MaxentSolution s{u, ExtendedReal(0.0), std::nullopt, ExtendedReal(shannon_entropy(u)), 0.0, 0.0};
    fill_defects(s, a);
    return s;
  }
  const auto root = solve_tilted(a, Probs{});
  if (!root) return vertex_solution(a, false);
  MaxentSolution s{root->second, ExtendedReal(root->first), std::nullopt,
                   ExtendedReal(shannon_entropy(root->second)), 0.0, 0.0};
  fill_defects(s, a);
  return s;
}

MaxentSolution min_kl(const Average& a, const Distribution& m) {
  if (!m.strictly_positive()) throw std::domain_error("min_kl: m must have all entries > 0");
  auto with_value = [&](MaxentSolution s) {
    s.functional_value = kl_divergence(s.distribution, m);
    return s;
  };
  if (a.is_vertex()) return with_value(vertex_solution(a, true));
  Probs log_base;
  for (int i = 0; i < kFaces; ++i) log_base[i] = std::log(m[i]);
  const auto root = solve_tilted(a, log_base);
  if (!root) return with_value(vertex_solution(a, false));
  MaxentSolution s{root->second, ExtendedReal(root->first), std::nullopt, ExtendedReal(0.0), 0.0, 0.0};
  fill_defects(s, a);
  return with_value(s);
}

namespace {

// Stationarity gives f_i = w_i / (mu + lambda i); combining both constraints
// yields mu = W - lambda a with W = sum w_i, so only lambda is unknown:
//   h(lambda) = sum w_i / (W + lambda (i - a)) - 1 = 0.
// h is convex on its domain (all denominators > 0), h(0) = 0, and the
// solution is the other root.
MaxentSolution burg_impl(const Average& a, const Probs& w) {
  const double target = a.value();
  double total = 0.0, wmean = 0.0;
  for (int i = 0; i < kFaces; ++i) {
    total += w[i];
    wmean += w[i] * kFaceValues[i];
  }
  wmean /= total;

  auto h = [&](double lambda) {
    double s = 0.0, ds = 0.0;
    for (int i = 0; i < kFaces; ++i) {
      const double d = total + lambda * (kFaceValues[i] - target);
      s += w[i] / d;
      ds -= w[i] * (kFaceValues[i] - target) / (d * d);
    }
    return std::pair{s - 1.0, ds};
  };

  double lambda = 0.0;
  if (std::abs(wmean - target) > 1e-15) {
    // Root lies on the side where h dips below zero.
    const bool negative_side = wmean < target;
    const double edge = negative_side ? -total / (kFaceValues.back() - target)
                                      : total / (target - kFaceValues.front());
    // Locate the minimum of h between 0 and the edge by bisection on h'.
    double in = 0.0, out = edge;
    for (int it = 0; it < kMaxIterations; ++it) {
      const double mid = 0.5 * (in + out);
      const double slope = h(mid).second;
      // On the negative side h decreases towards the minimum from the edge.
      if ((slope > 0.0) == negative_side) in = mid; else out = mid;
      if (std::abs(out - in) < 1e-16 * std::abs(edge)) break;
    }
    // Root between the minimum (h < 0) and the edge (h -> +inf).
    double good = 0.5 * (in + out);
    double bad = edge;
    lambda = good;
    for (int it = 0; it < kMaxIterations; ++it) {
      const auto [g, dg] = h(lambda);
      if (std::abs(g) <= kResidualTolerance) break;
      if (g < 0.0) good = lambda; else bad = lambda;
      double next = dg != 0.0 ? lambda - g / dg : 0.5 * (good + bad);
      const double lo = std::min(good, bad), hi = std::max(good, bad);
      if (!(next > lo && next < hi)) next = 0.5 * (good + bad);
      if (hi - lo <= 1e-17 * std::abs(edge)) break;
      lambda = next;
    }
  }
  const double mu = total - lambda * target;
  Probs f;
  for (int i = 0; i < kFaces; ++i) f[i] = w[i] / (mu + lambda * kFaceValues[i]);
  MaxentSolution s{Distribution::from_weights(f), ExtendedReal(lambda), mu, ExtendedReal(0.0), 0.0, 0.0};
  double value = 0.0;
  for (int i = 0; i < kFaces; ++i) value += w[i] * std::log(s.distribution[i]);
  s.functional_value = ExtendedReal(value);
  fill_defects(s, a);
  return s;
}

}  // namespace

MaxentSolution maxent_burg(const Average& a) {
  if (a.is_vertex()) {
    auto s = vertex_solution(a, true);
    s.functional_value = ExtendedReal::minus_infinity();
    return s;
  }
  Probs w;
  w.fill(1.0);
  return burg_impl(a, w);
}

MaxentSolution maxent_weighted_burg(const Average& a, const Distribution& w) {
  if (!w.strictly_positive()) throw std::domain_error("maxent_weighted_burg: weights must be > 0");
  if (a.is_vertex()) {
    auto s = vertex_solution(a, true);
    s.functional_value = ExtendedReal::minus_infinity();
    return s;
  }
  return burg_impl(a, w.probs());
}

}  // namespace dicemax
