#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace dicemax {

inline constexpr int kFaces = 6;

using Probs = std::array<double, kFaces>;
using Counts = std::array<int, kFaces>;

/// Face values (1, ..., 6) in pips.
inline constexpr std::array<int, kFaces> kFaceValues{1, 2, 3, 4, 5, 6};

inline constexpr double kNormalizationTolerance = 1e-12;

// ---------------------------------------------------------------------------
// Errors

/// The conditioning data admit no outcome sequence (e.g. N = 1, a = 7/2).
class ContradictoryData : public std::domain_error {
 public:
  explicit ContradictoryData(const std::string& what) : std::domain_error(what) {}
};

// ---------------------------------------------------------------------------

/// Real number extended with explicit +inf / -inf tags.
///
/// Burg entropy and KL divergence are singular on the simplex boundary; the
/// tags force callers to handle that case instead of propagating IEEE infs.
class ExtendedReal {
 public:
  enum class Kind { Finite, PlusInfinity, MinusInfinity };

  constexpr explicit ExtendedReal(double v) : kind_(Kind::Finite), value_(v) {}
  static constexpr ExtendedReal plus_infinity() { return ExtendedReal(Kind::PlusInfinity); }
  static constexpr ExtendedReal minus_infinity() { return ExtendedReal(Kind::MinusInfinity); }

  constexpr Kind kind() const { return kind_; }
  constexpr bool is_finite() const { return kind_ == Kind::Finite; }
  /// Throws std::logic_error when the value is one of the infinite tags.
  double value() const;

  /// Total order with -inf < every finite < +inf.
  friend bool operator<(const ExtendedReal& x, const ExtendedReal& y);
  friend bool operator==(const ExtendedReal& x, const ExtendedReal& y) = default;

 private:
  constexpr explicit ExtendedReal(Kind k) : kind_(k), value_(0.0) {}
  Kind kind_;
  double value_;
};

/// Exact average number of pips per throw, 1 <= a <= 6.
class Average {
 public:
  /// Throws std::domain_error if the value lies outside [1, 6] or den == 0.
  Average(std::int64_t numerator, std::int64_t denominator = 1);

  /// Accepts "7/2", "3.5", "5". Throws std::invalid_argument on bad syntax.
  static Average parse(std::string_view text);

  std::int64_t numerator() const { return num_; }
  std::int64_t denominator() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// a*N when it is an integer, i.e. the total pip count of N throws.
  std::optional<std::int64_t> pip_total(std::int64_t throws) const;

  /// The average under the face relabelling i -> 7 - i.
  Average reflected() const { return Average(7 * den_ - num_, den_); }

  bool is_vertex() const { return den_ == 1 && (num_ == 1 || num_ == 6); }

  /// "5", "3.5", or "p/q" when no short decimal form exists.
  std::string label() const;

  friend bool operator==(const Average&, const Average&) = default;

 private:
  std::int64_t num_;
  std::int64_t den_;
};

/// A point of the probability simplex over the six faces.
class Distribution {
 public:
  /// Validates non-negativity and normalization within `tolerance`, then
  /// renormalizes exactly.
  static Distribution from_probs(const Probs& probs, double tolerance = kNormalizationTolerance);
  /// Normalizes non-negative weights with a positive sum.
  static Distribution from_weights(const Probs& weights);
  static Distribution uniform();
  /// Point mass on `face` (1-based).
  static Distribution vertex(int face);

  double operator[](int index) const { return probs_[static_cast<std::size_t>(index)]; }
  const Probs& probs() const { return probs_; }

  /// Expected pips, v . p.
  double mean() const;
  Distribution reflected() const;
  bool strictly_positive() const;

 private:
  explicit Distribution(const Probs& p) : probs_(p) {}
  Probs probs_;
};

/// Face occupation counts over N throws.
class FrequencyVector {
 public:
  explicit FrequencyVector(const Counts& counts);

  int operator[](int index) const { return counts_[static_cast<std::size_t>(index)]; }
  const Counts& counts() const { return counts_; }
  int total() const { return total_; }
  std::int64_t pip_sum() const;
  FrequencyVector reflected() const;

  friend bool operator==(const FrequencyVector&, const FrequencyVector&) = default;
  friend auto operator<=>(const FrequencyVector& x, const FrequencyVector& y) {
    return x.counts_ <=> y.counts_;
  }

 private:
  Counts counts_;
  int total_;
};

// ---------------------------------------------------------------------------
// Models and queries

struct FairThrow {};

/// Symmetric (m absent) or generalized Dirichlet model. Pseudo-count per face
/// is K (symmetric) or K*m_i (generalized).
struct Johnson {
  double K;
  std::optional<Distribution> m;
};

/// Multiplicity model, density ~ L! / prod (L p_i)!  [times prod m_i^(L p_i)].
struct Multiplicity {
  double L;
  std::optional<Distribution> m;
};

using ModelSpec = std::variant<FairThrow, Johnson, Multiplicity>;

ModelSpec make_fair_throw();
/// Throws std::domain_error unless K > 0 and m (if given) is strictly positive.
ModelSpec make_johnson(double K, std::optional<Distribution> m = std::nullopt);
/// Throws std::domain_error unless L >= 1 and m (if given) is strictly positive.
ModelSpec make_multiplicity(double L, std::optional<Distribution> m = std::nullopt);

std::string model_name(const ModelSpec& model);

enum class Throw { Old, New };

struct Exact {
  int n;
};
struct LargeN {};
using Regime = std::variant<Exact, LargeN>;

/// Relation between the number of throws and a model parameter that is
/// itself "large" (the analytic-limit rows of the tables).
enum class ParameterLimit {
  DataFewerThanParameter,  // N / K (or N / L) small
  DataMoreThanParameter,   // N / K (or N / L) large
  Unspecified,
};

struct Query {
  Regime regime;
  Average average;
  Throw throw_kind;
  ModelSpec model;
  /// Set when the model parameter is "large"; the numeric K / L is then ignored.
  std::optional<ParameterLimit> large_parameter;
};

enum class Method { ClosedForm, BruteForce, MonteCarlo, DeterministicQuad, AnalyticLimit };

std::string_view method_name(Method method);

struct PosteriorResult {
  Distribution distribution;
  double entropy_nats;
  Method method;
  std::optional<Probs> mc_stderr;
  /// |sum - 1| of the numerically integrated row before renormalization.
  double normalization_defect = 0.0;
  std::int64_t evaluations = 0;

  static PosteriorResult make(const Distribution& d, Method method,
                              std::optional<Probs> stderr_ = std::nullopt);
};

// ---------------------------------------------------------------------------
// Entropy functionals (nats)

/// -sum f_i ln f_i with 0 ln 0 = 0.
double shannon_entropy(const Distribution& f);
/// sum ln f_i; minus-infinity tag when any f_i == 0.
ExtendedReal burg_entropy(const Distribution& f);
/// D(m, f) = sum m_i ln(m_i / f_i); plus-infinity tag when f_i = 0 < m_i.
ExtendedReal kl_divergence(const Distribution& m, const Distribution& f);

}  // namespace dicemax
