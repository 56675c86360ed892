#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "dicemax/core.hpp"

using namespace dicemax;

namespace {

Distribution random_distribution(std::mt19937_64& rng, bool allow_zeros = false) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution zero(0.2);
  Probs w;
  double s = 0.0;
  for (auto& x : w) s += (x = (allow_zeros && zero(rng)) ? 0.0 : e(rng));
  if (s == 0.0) w[0] = 1.0;
  return Distribution::from_weights(w);
}

}  // namespace

TEST_CASE("shannon entropy examples") {
  CHECK(shannon_entropy(Distribution::uniform()) == doctest::Approx(std::log(6.0)).epsilon(1e-14));
  CHECK(shannon_entropy(Distribution::vertex(6)) == 0.0);
  const auto third = Distribution::from_probs({0, 0, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-12);
  CHECK(shannon_entropy(third) == doctest::Approx(std::log(3.0)));
  CHECK(std::round(shannon_entropy(third) * 100) / 100 == doctest::Approx(1.10));
}

TEST_CASE("burg entropy examples") {
  CHECK(burg_entropy(Distribution::uniform()).value() == doctest::Approx(6 * std::log(1.0 / 6)));
  CHECK(burg_entropy(Distribution::vertex(2)).kind() == ExtendedReal::Kind::MinusInfinity);
  const auto f = Distribution::from_probs({0.2, 0.2, 0.2, 0.2, 0.2, 0.0}, 1e-12);
  CHECK(burg_entropy(f) == ExtendedReal::minus_infinity());
}

TEST_CASE("kl divergence examples") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const auto f = random_distribution(rng, true);
    CHECK(kl_divergence(f, f).value() == doctest::Approx(0.0).epsilon(1e-15));
    const auto u = kl_divergence(Distribution::uniform(), f);
    if (f.strictly_positive()) {
      CHECK(u.value() == doctest::Approx(-std::log(6.0) - [&] {
              double s = 0;
              for (int k = 0; k < 6; ++k) s += std::log(f[k]) / 6;
              return s;
            }()));
    } else {
      CHECK(u.kind() == ExtendedReal::Kind::PlusInfinity);
    }
    // D(uniform, f) relates to cross entropy; D(f, uniform) = ln 6 - H(f).
    CHECK(kl_divergence(f, Distribution::uniform()).value() ==
          doctest::Approx(std::log(6.0) - shannon_entropy(f)).epsilon(1e-12));
  }
  const auto e1 = Distribution::vertex(1);
  const auto half = Distribution::from_probs({0.5, 0.5, 0, 0, 0, 0}, 1e-12);
  CHECK(kl_divergence(e1, half).value() == doctest::Approx(std::log(2.0)));
  CHECK(kl_divergence(half, e1) == ExtendedReal::plus_infinity());
}

TEST_CASE("entropy bounds and permutation invariance") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto f = random_distribution(rng, true);
    const double h = shannon_entropy(f);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(6.0) + 1e-12);
    Probs p = f.probs();
    std::shuffle(p.begin(), p.end(), rng);
    const auto g = Distribution::from_probs(p, 1e-12);
    CHECK(shannon_entropy(g) == doctest::Approx(h).epsilon(1e-12));
    if (burg_entropy(f).is_finite()) {
      CHECK(burg_entropy(g).value() == doctest::Approx(burg_entropy(f).value()));
    } else {
      CHECK(burg_entropy(g) == burg_entropy(f));
    }
    const auto m = random_distribution(rng);
    const auto d = kl_divergence(m, f);
    if (d.is_finite()) CHECK(d.value() >= 0.0);
  }
}

TEST_CASE("extended reals") {
  const auto neg = ExtendedReal::minus_infinity();
  const auto pos = ExtendedReal::plus_infinity();
  CHECK(neg < ExtendedReal(-1e300));
  CHECK(ExtendedReal(1e300) < pos);
  CHECK_FALSE(pos < pos);
  CHECK_THROWS_AS(pos.value(), std::logic_error);
}

TEST_CASE("average parsing and invariants") {
  CHECK(Average::parse("7/2") == Average(7, 2));
  CHECK(Average::parse("3.5") == Average(7, 2));
  CHECK(Average::parse("5") == Average(5));
  CHECK(Average::parse("14/4") == Average(7, 2));
  CHECK(Average(7, 2).label() == "3.5");
  CHECK(Average(5).label() == "5");
  CHECK(Average(10, 3).label() == "10/3");
  CHECK_THROWS_AS(Average(13, 2), std::domain_error);
  CHECK_THROWS_AS(Average(0), std::domain_error);
  CHECK_THROWS_AS(Average(1, 0), std::domain_error);
  CHECK_THROWS_AS(Average::parse("abc"), std::invalid_argument);
  CHECK_THROWS(Average::parse("7.5"));
  CHECK(Average(7, 2).pip_total(4) == 14);
  CHECK_FALSE(Average(7, 2).pip_total(1).has_value());
  CHECK(Average(5).reflected() == Average(2));
  CHECK(Average(6).is_vertex());
  CHECK_FALSE(Average(5).is_vertex());
}

TEST_CASE("distribution construction") {
  CHECK_THROWS(Distribution::from_probs({0.5, 0.5, 0.5, 0, 0, 0}));
  CHECK_THROWS(Distribution::from_probs({-0.1, 0.3, 0.2, 0.2, 0.2, 0.2}));
  CHECK_THROWS(Distribution::from_weights({0, 0, 0, 0, 0, 0}));
  const auto u = Distribution::uniform();
  double s = 0;
  for (int i = 0; i < 6; ++i) s += u[i];
  CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(u.mean() == doctest::Approx(3.5));
  CHECK(Distribution::vertex(6).mean() == 6.0);
  CHECK(Distribution::vertex(1).reflected()[5] == 1.0);
  CHECK_THROWS(Distribution::vertex(0));
  CHECK_THROWS(Distribution::vertex(7));
}

TEST_CASE("frequency vectors") {
  const FrequencyVector nv({0, 0, 0, 2, 1, 0});
  CHECK(nv.total() == 3);
  CHECK(nv.pip_sum() == 13);
  CHECK(nv.reflected().counts() == Counts{0, 1, 2, 0, 0, 0});
  CHECK_THROWS(FrequencyVector({-1, 0, 0, 0, 0, 1}));
}

TEST_CASE("model validation") {
  CHECK_NOTHROW(make_johnson(0.5));
  CHECK_THROWS_AS(make_johnson(0.0), std::domain_error);
  CHECK_THROWS_AS(make_johnson(-1.0), std::domain_error);
  CHECK_NOTHROW(make_multiplicity(1.0));
  CHECK_THROWS_AS(make_multiplicity(0.5), std::domain_error);
  CHECK_THROWS_AS(make_multiplicity(5.0, Distribution::vertex(1)), std::domain_error);
  CHECK(model_name(make_fair_throw()) == "fair");
}

TEST_CASE("posterior result entropy matches its distribution") {
  const auto d = Distribution::from_probs({0.1, 0.1, 0.1, 0.2, 0.2, 0.3}, 1e-12);
  const auto r = PosteriorResult::make(d, Method::ClosedForm);
  CHECK(std::abs(r.entropy_nats - shannon_entropy(d)) <= 1e-12);
  CHECK(method_name(Method::MonteCarlo) == "monte-carlo");
}
