#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "dicemax/simplex_integration.hpp"
#include "support.hpp"

using namespace dicemax;

namespace {

IntegrationBudget budget(std::int64_t evaluations, int threads = 1) {
  IntegrationBudget b;
  b.max_evaluations = evaluations;
  b.threads = threads;
  return b;
}

double log_or_inf(double x) { return x > 0 ? std::log(x) : -std::numeric_limits<double>::infinity(); }

}  // namespace

TEST_CASE("uniform sampling moments") {
  RngStream rng(1, 0);
  const auto xs = sample_simplex_uniform(rng, 1'000'000);
  double s1 = 0, s11 = 0, s12 = 0, s1212 = 0;
  for (const auto& x : xs) {
    s1 += x[0];
    s11 += x[0] * x[0];
    s12 += x[0] * x[1];
    s1212 += x[0] * x[1] * x[0] * x[1];
    CHECK_FALSE(std::abs(x[0] + x[1] + x[2] + x[3] + x[4] + x[5] - 1.0) > 1e-12);
  }
  const double n = xs.size();
  const double m1 = s1 / n, se1 = std::sqrt((s11 / n - m1 * m1) / n);
  const double m12 = s12 / n, se12 = std::sqrt((s1212 / n - m12 * m12) / n);
  CHECK(std::abs(m1 - 1.0 / 6) < 3 * se1);
  CHECK(std::abs(m12 - 1.0 / 42) < 3 * se12);
}

TEST_CASE("marginal is Beta(1,5): Kolmogorov-Smirnov") {
  RngStream rng(2, 0);
  const auto xs = sample_simplex_uniform(rng, 20'000);
  std::vector<double> v;
  for (const auto& x : xs) v.push_back(x[2]);
  std::sort(v.begin(), v.end());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double cdf = 1.0 - std::pow(1.0 - v[i], 5);
    d = std::max({d, std::abs(cdf - double(i) / v.size()), std::abs(cdf - double(i + 1) / v.size())});
  }
  CHECK(d < 1.63 / std::sqrt(double(v.size())));  // 1% critical value
}

TEST_CASE("sampling is deterministic per seed and stream") {
  RngStream a(9, 3), b(9, 3), c(9, 4);
  const auto xa = sample_simplex_uniform(a, 100), xb = sample_simplex_uniform(b, 100), xc = sample_simplex_uniform(c, 100);
  CHECK(std::equal(xa.begin(), xa.end(), xb.begin(), [](auto& x, auto& y) { return x.probs() == y.probs(); }));
  CHECK(xa[0].probs() != xc[0].probs());
}

TEST_CASE("dirichlet beta integral") {
  CHECK(dirichlet_beta_integral({1, 1, 1, 1, 1, 1}) == doctest::Approx(std::log(1.0 / 120)).epsilon(1e-14));
  CHECK(dirichlet_beta_integral({2, 1, 1, 1, 1, 1}) == doctest::Approx(std::log(1.0 / 720)).epsilon(1e-14));
  // Gamma(1/2)^6 / Gamma(3) = pi^3 / 2
  CHECK(dirichlet_beta_integral({.5, .5, .5, .5, .5, .5}) == doctest::Approx(std::log(std::pow(M_PI, 3) / 2)));
  CHECK_THROWS_AS(dirichlet_beta_integral({0, 1, 1, 1, 1, 1}), std::domain_error);
}

TEST_CASE("grundmann-moeller rules integrate monomials exactly") {
  // Normalized measure on the 5-simplex: E[prod p^k] = 5! prod k! / (5 + sum k)!
  for (int s : {2, 3}) {
    const auto rule = grundmann_moeller_rule(5, s);
    double wsum = 0.0;
    for (double w : rule.weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-13));
    const std::vector<std::array<int, 6>> monomials{{2, 1, 0, 0, 0, 0}, {1, 1, 1, 1, 1, 1}, {3, 0, 2, 0, 0, 1}};
    for (const auto& k : monomials) {
      int degree = 0;
      double exact = 120.0;
      for (int e : k) {
        degree += e;
        exact *= std::tgamma(e + 1.0);
      }
      exact /= std::tgamma(degree + 6.0);
      if (degree > 2 * s + 1) continue;
      double q = 0.0, lower = 0.0;
      for (std::size_t i = 0; i < rule.points.size(); ++i) {
        double v = 1.0;
        for (int f = 0; f < 6; ++f) v *= std::pow(rule.points[i][f], k[f]);
        q += rule.weights[i] * v;
        lower += rule.lower_weights[i] * v;
      }
      CHECK(q == doctest::Approx(exact).epsilon(1e-12));
      if (degree <= 2 * s - 1) CHECK(lower == doctest::Approx(exact).epsilon(1e-12));
    }
  }
}

TEST_CASE("constraint polytope vertices") {
  const auto five = build_constraint_polytope(Average(5));
  CHECK(five.vertices.size() == 5);
  std::set<Probs> got;
  for (const auto& v : five.vertices) got.insert(v.probs());
  CHECK(got.count(Distribution::vertex(5).probs()) == 1);
  for (int i = 1; i <= 4; ++i) {
    const Probs expect = [&] {
      Probs p{};
      p[i - 1] = 1.0 / (6 - i);
      p[5] = (5.0 - i) / (6 - i);
      return p;
    }();
    const bool found = std::any_of(five.vertices.begin(), five.vertices.end(), [&](const Distribution& d) {
      for (int f = 0; f < 6; ++f)
        if (std::abs(d[f] - expect[f]) > 1e-15) return false;
      return true;
    });
    CHECK(found);
  }

  const auto mid = build_constraint_polytope(Average(7, 2));
  CHECK(mid.vertices.size() == 9);
  for (const auto& v : mid.vertices) {
    const auto r = v.reflected();
    CHECK(std::any_of(mid.vertices.begin(), mid.vertices.end(),
                      [&](const Distribution& d) { return testing::max_abs_gap(d, r) < 1e-15; }));
  }
  CHECK_THROWS_AS(build_constraint_polytope(Average(6)), DegeneratePolytope);
  CHECK_THROWS_AS(build_constraint_polytope(Average(1)), DegeneratePolytope);
}

TEST_CASE("polytope vertices satisfy the constraints and volumes sum to one") {
  for (int num = 11; num < 60; ++num) {
    const Average a(num, 10);
    const auto poly = build_constraint_polytope(a);
    for (const auto& v : poly.vertices) CHECK(v.mean() == doctest::Approx(a.value()).epsilon(1e-13));
    double total = 0.0;
    for (double w : poly.relative_volumes) {
      CHECK(w > 0.0);
      total += w;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(poly.simplices.size() == poly.relative_volumes.size());
    // Reflection maps the slice onto the slice for the reflected average.
    CHECK(build_constraint_polytope(a.reflected()).vertices.size() == poly.vertices.size());
  }
}

TEST_CASE("simplex integrals with closed forms") {
  for (auto integrator : {Integrator::Deterministic, Integrator::MonteCarlo}) {
    const auto b = budget(200'000);
    const auto one = integrate_simplex([](const Distribution&) { return 0.0; }, integrator, b);
    CHECK(one.value == doctest::Approx(1.0).epsilon(1e-12));
    if (integrator == Integrator::Deterministic) CHECK(one.std_error == 0.0);

    const auto p1 = integrate_simplex([](const Distribution& p) { return log_or_inf(p[0]); }, integrator, b);
    CHECK(std::abs(p1.value - 1.0 / 6) <= 3 * p1.std_error + 1e-10);

    const auto k2 = integrate_simplex(
        [](const Distribution& p) {
          double s = 0;
          for (int i = 0; i < 6; ++i) s += log_or_inf(p[i]);
          return s;
        },
        integrator, b);
    const double exact = std::exp(dirichlet_beta_integral({2, 2, 2, 2, 2, 2})) * 120.0;
    CHECK(std::abs(k2.value - exact) <= 3 * k2.std_error + 1e-9 * exact);
  }
}

TEST_CASE("integrators agree within their error estimates") {
  // Haldane-like weight concentrated near the boundary, like the L=1 model.
  const ScalarLogIntegrand f = [](const Distribution& p) {
    double s = 0;
    for (int i = 0; i < 6; ++i) s -= std::lgamma(3.0 * p[i] + 1.0);
    return s + 2.0 * log_or_inf(p[5] + 0.1);
  };
  const auto q = integrate_simplex(f, Integrator::Deterministic, budget(300'000));
  const auto m = integrate_simplex(f, Integrator::MonteCarlo, budget(300'000));
  CHECK(std::abs(q.value - m.value) <= 3 * m.std_error + q.error_indicator);

  const auto poly = build_constraint_polytope(Average(5));
  const auto qp = integrate_polytope(poly, f, Integrator::Deterministic, budget(300'000));
  const auto mp = integrate_polytope(poly, f, Integrator::MonteCarlo, budget(300'000));
  CHECK(std::abs(qp.value - mp.value) <= 3 * mp.std_error + qp.error_indicator);
}

TEST_CASE("polytope integral of a coordinate equals the slice mean") {
  // The slice mean of v . f is a, for any triangulation.
  const auto poly = build_constraint_polytope(Average(9, 2));
  const LogIntegrand g = [](const Probs& p, std::span<double> out) {
    out[0] = 0.0;
    double mean = 0;
    for (int i = 0; i < 6; ++i) mean += (i + 1) * p[i];
    out[1] = std::log(mean);
  };
  for (auto integrator : {Integrator::Deterministic, Integrator::MonteCarlo}) {
    const auto v = integrate_vector(polytope_region(poly), g, 2, integrator, budget(50'000));
    const auto [r, e] = v.ratio(1);
    CHECK(r == doctest::Approx(4.5).epsilon(1e-10));
  }
}

TEST_CASE("ratio estimates are invariant under a log offset") {
  const auto poly = build_constraint_polytope(Average(5));
  auto make = [](double offset) {
    return LogIntegrand([offset](const Probs& p, std::span<double> out) {
      double base = offset;
      for (int i = 0; i < 6; ++i) base -= std::lgamma(5.0 * p[i] + 1.0);
      out[0] = base;
      for (int i = 0; i < 6; ++i) out[i + 1] = base + log_or_inf(p[i]);
    });
  };
  for (auto integrator : {Integrator::Deterministic, Integrator::MonteCarlo}) {
    const auto a = integrate_vector(polytope_region(poly), make(0.0), 7, integrator, budget(40'000));
    const auto b = integrate_vector(polytope_region(poly), make(-700.0), 7, integrator, budget(40'000));
    const auto c = integrate_vector(polytope_region(poly), make(650.0), 7, integrator, budget(40'000));
    for (std::size_t k = 1; k < 7; ++k) {
      CHECK(a.ratio(k).first == doctest::Approx(b.ratio(k).first).epsilon(1e-12));
      CHECK(a.ratio(k).first == doctest::Approx(c.ratio(k).first).epsilon(1e-12));
    }
  }
}

TEST_CASE("results do not depend on the thread count") {
  const ScalarLogIntegrand f = [](const Distribution& p) { return -std::lgamma(4.0 * p[2] + 1.0) + log_or_inf(p[0]); };
  for (auto integrator : {Integrator::Deterministic, Integrator::MonteCarlo}) {
    const auto one = integrate_simplex(f, integrator, budget(60'000, 1));
    const auto four = integrate_simplex(f, integrator, budget(60'000, 4));
    const auto again = integrate_simplex(f, integrator, budget(60'000, 1));
    CHECK(one.value == four.value);
    CHECK(one.std_error == four.std_error);
    CHECK(one.value == again.value);
    CHECK(one.evaluations == four.evaluations);
  }
  IntegrationBudget other = budget(60'000);
  other.seed = 12345;
  CHECK(integrate_simplex(f, Integrator::MonteCarlo, other).value !=
        integrate_simplex(f, Integrator::MonteCarlo, budget(60'000)).value);
}

TEST_CASE("budget is respected and exhaustion is reported") {
  const ScalarLogIntegrand spiky = [](const Distribution& p) { return -200.0 * std::abs(p[0] - 0.3); };
  IntegrationBudget b = budget(5'000);
  b.relative_tolerance = 1e-12;
  const auto q = integrate_simplex(spiky, Integrator::Deterministic, b);
  CHECK(q.evaluations <= 5'000);
  CHECK_FALSE(q.converged);
  CHECK_THROWS_AS(require_converged(q), BudgetExhausted);
  const auto ok = integrate_simplex([](const Distribution&) { return 0.0; }, Integrator::Deterministic, budget(50'000));
  CHECK(ok.converged);
  CHECK_NOTHROW(require_converged(ok));
}
