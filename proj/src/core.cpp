#include "dicemax/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace dicemax {

double ExtendedReal::value() const {
  if (kind_ != Kind::Finite) throw std::logic_error("ExtendedReal: value() on infinite tag");
  return value_;
}

bool operator<(const ExtendedReal& x, const ExtendedReal& y) {
  using K = ExtendedReal::Kind;
  if (x.kind_ == y.kind_) return x.kind_ == K::Finite && x.value_ < y.value_;
  if (x.kind_ == K::MinusInfinity) return true;
  if (x.kind_ == K::PlusInfinity) return false;
  return y.kind_ == K::PlusInfinity;
}

// ---------------------------------------------------------------------------

Average::Average(std::int64_t numerator, std::int64_t denominator) {
  if (denominator == 0) throw std::domain_error("Average: zero denominator");
  if (denominator < 0) {
    numerator = -numerator;
    denominator = -denominator;
  }
  const std::int64_t g = std::gcd(numerator, denominator);
  num_ = numerator / g;
  den_ = denominator / g;
  if (num_ < den_ || num_ > 6 * den_) {
    throw std::domain_error("Average: value must lie in [1, 6]");
  }
}

Average Average::parse(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  auto parse_int = [](std::string_view s) -> std::int64_t {
    if (s.empty() || s.size() > 15) throw std::invalid_argument("Average: bad integer");
    std::int64_t v = 0;
    for (char c : s) {
      if (!std::isdigit(static_cast<unsigned char>(c))) {
        throw std::invalid_argument("Average: bad integer '" + std::string(s) + "'");
      }
      v = 10 * v + (c - '0');
    }
    return v;
  };

  text = trim(text);
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return Average(parse_int(trim(text.substr(0, slash))), parse_int(trim(text.substr(slash + 1))));
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    const auto whole = text.substr(0, dot);
    const auto frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 9) throw std::invalid_argument("Average: bad decimal");
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    const std::int64_t w = whole.empty() ? 0 : parse_int(whole);
    return Average(w * scale + parse_int(frac), scale);
  }
  return Average(parse_int(text), 1);
}

std::optional<std::int64_t> Average::pip_total(std::int64_t throws) const {
  if ((num_ * throws) % den_ != 0) return std::nullopt;
  return num_ * throws / den_;
}

std::string Average::label() const {
  if (den_ == 1) return std::to_string(num_);
  // Short decimal form exists iff den = 2^x 5^y.
  std::int64_t d = den_;
  int twos = 0, fives = 0;
  while (d % 2 == 0) d /= 2, ++twos;
  while (d % 5 == 0) d /= 5, ++fives;
  if (d != 1) return std::to_string(num_) + "/" + std::to_string(den_);
  const int digits = std::max(twos, fives);
  std::int64_t scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const std::int64_t scaled = num_ * (scale / den_);
  std::string frac = std::to_string(scaled % scale);
  frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
  return std::to_string(scaled / scale) + "." + frac;
}

// ---------------------------------------------------------------------------

Distribution Distribution::from_probs(const Probs& probs, double tolerance) {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::domain_error("Distribution: entries must be finite and non-negative");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw std::domain_error("Distribution: entries do not sum to 1");
  }
  Probs out = probs;
  for (double& p : out) p /= sum;
  return Distribution(out);
}

Distribution Distribution::from_weights(const Probs& weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::domain_error("Distribution: weights must be finite and non-negative");
    }
    sum += w;
  }
  if (!(sum > 0.0)) throw std::domain_error("Distribution: weights sum to zero");
  Probs out = weights;
  for (double& w : out) w /= sum;
  return Distribution(out);
}

Distribution Distribution::uniform() {
  Probs p;
  p.fill(1.0 / kFaces);
  return Distribution(p);
}

Distribution Distribution::vertex(int face) {
  if (face < 1 || face > kFaces) throw std::domain_error("Distribution: face out of range");
  Probs p{};
  p[static_cast<std::size_t>(face - 1)] = 1.0;
  return Distribution(p);
}

double Distribution::mean() const {
  double m = 0.0;
  for (int i = 0; i < kFaces; ++i) m += kFaceValues[i] * probs_[i];
  return m;
}

Distribution Distribution::reflected() const {
  Probs p;
  std::reverse_copy(probs_.begin(), probs_.end(), p.begin());
  return Distribution(p);
}

bool Distribution::strictly_positive() const {
  return std::all_of(probs_.begin(), probs_.end(), [](double p) { return p > 0.0; });
}

// ---------------------------------------------------------------------------

FrequencyVector::FrequencyVector(const Counts& counts) : counts_(counts), total_(0) {
  for (int c : counts_) {
    if (c < 0) throw std::domain_error("FrequencyVector: negative count");
    total_ += c;
  }
}

std::int64_t FrequencyVector::pip_sum() const {
  std::int64_t s = 0;
  for (int i = 0; i < kFaces; ++i) s += static_cast<std::int64_t>(kFaceValues[i]) * counts_[i];
  return s;
}

FrequencyVector FrequencyVector::reflected() const {
  Counts c;
  std::reverse_copy(counts_.begin(), counts_.end(), c.begin());
  return FrequencyVector(c);
}

// ---------------------------------------------------------------------------

namespace {

void check_prior_mean(const std::optional<Distribution>& m) {
  if (m && !m->strictly_positive()) {
    throw std::domain_error("model: prior mean m must have all entries > 0");
  }
}

}  // namespace

ModelSpec make_fair_throw() { return FairThrow{}; }

ModelSpec make_johnson(double K, std::optional<Distribution> m) {
  if (!(K > 0.0) || !std::isfinite(K)) throw std::domain_error("Johnson model requires K > 0");
  check_prior_mean(m);
  return Johnson{K, std::move(m)};
}

ModelSpec make_multiplicity(double L, std::optional<Distribution> m) {
  if (!(L >= 1.0) || !std::isfinite(L)) throw std::domain_error("multiplicity model requires L >= 1");
  check_prior_mean(m);
  return Multiplicity{L, std::move(m)};
}

std::string model_name(const ModelSpec& model) {
  struct Visitor {
    std::string operator()(const FairThrow&) const { return "fair"; }
    std::string operator()(const Johnson&) const { return "johnson"; }
    std::string operator()(const Multiplicity&) const { return "multiplicity"; }
  };
  return std::visit(Visitor{}, model);
}

std::string_view method_name(Method method) {
  switch (method) {
    case Method::ClosedForm: return "closed-form";
    case Method::BruteForce: return "brute-force";
    case Method::MonteCarlo: return "monte-carlo";
    case Method::DeterministicQuad: return "deterministic-quadrature";
    case Method::AnalyticLimit: return "analytic-limit";
  }
  return "unknown";
}

PosteriorResult PosteriorResult::make(const Distribution& d, Method method,
                                      std::optional<Probs> stderr_) {
  return PosteriorResult{d, shannon_entropy(d), method, stderr_};
}

// ---------------------------------------------------------------------------

double shannon_entropy(const Distribution& f) {
  double h = 0.0;
  for (double p : f.probs()) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

ExtendedReal burg_entropy(const Distribution& f) {
  double h = 0.0;
  for (double p : f.probs()) {
    if (p <= 0.0) return ExtendedReal::minus_infinity();
    h += std::log(p);
  }
  return ExtendedReal(h);
}

ExtendedReal kl_divergence(const Distribution& m, const Distribution& f) {
  double d = 0.0;
  for (int i = 0; i < kFaces; ++i) {
    if (m[i] <= 0.0) continue;
    if (f[i] <= 0.0) return ExtendedReal::plus_infinity();
    d += m[i] * std::log(m[i] / f[i]);
  }
  return ExtendedReal(std::max(d, 0.0));
}

}  // namespace dicemax
