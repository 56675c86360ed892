#include "dicemax/combinatorics.hpp"

#include <cmath>
#include <stdexcept>

namespace dicemax {

namespace {

// Depth-first over N_1..N_6. After fixing faces [0, face), the remaining
// `left` throws on faces face+1..6 can reach pip sums in
// [left*(face+1), left*6], which prunes the search.
void enumerate(int face, int left, std::int64_t remaining_sum, Counts& counts,
               std::vector<FrequencyVector>& out) {
  const int value = kFaceValues[static_cast<std::size_t>(face)];
  if (face == kFaces - 1) {
    if (remaining_sum == static_cast<std::int64_t>(left) * value) {
      counts[static_cast<std::size_t>(face)] = left;
      out.emplace_back(counts);
    }
    return;
  }
  for (int c = 0; c <= left; ++c) {
    const std::int64_t rest_sum = remaining_sum - static_cast<std::int64_t>(c) * value;
    const int rest = left - c;
    if (rest_sum < static_cast<std::int64_t>(rest) * (value + 1)) {
      // Larger c only lowers rest_sum further; but it also lowers the minimum
      // attainable, so keep scanning unless the sum is already exhausted.
      if (rest_sum < 0) break;
      continue;
    }
    if (rest_sum > static_cast<std::int64_t>(rest) * kFaceValues.back()) continue;
    counts[static_cast<std::size_t>(face)] = c;
    enumerate(face + 1, rest, rest_sum, counts, out);
  }
  counts[static_cast<std::size_t>(face)] = 0;
}

}  // namespace

ConstraintSet enumerate_frequencies_with_sum(int n, std::int64_t pip_total) {
  if (n < 1) throw std::domain_error("enumerate: N must be >= 1");
  ConstraintSet set{n, pip_total, {}};
  if (pip_total < n || pip_total > 6LL * n) return set;
  Counts counts{};
  enumerate(0, n, pip_total, counts, set.members);
  return set;
}

ConstraintSet enumerate_constrained_frequencies(int n, const Average& a) {
  if (n < 1) throw std::domain_error("enumerate: N must be >= 1");
  const auto total = a.pip_total(n);
  if (!total) return ConstraintSet{n, 0, {}};
  return enumerate_frequencies_with_sum(n, *total);
}

double log_multinomial(const FrequencyVector& nv) {
  double r = log_gamma_factorial(nv.total());
  for (int c : nv.counts()) r -= log_gamma_factorial(c);
  return r;
}

BigInt count_sequences(int n, std::int64_t s) {
  if (n < 1) throw std::domain_error("count_sequences: N must be >= 1");
  if (s < n || s > 6LL * n) return 0;
  // ways[t] = number of ordered tuples of the throws so far summing to t.
  std::vector<BigInt> ways(static_cast<std::size_t>(6 * n + 1));
  ways[0] = 1;
  for (int k = 0; k < n; ++k) {
    std::vector<BigInt> next(ways.size());
    for (std::size_t t = 0; t < ways.size(); ++t) {
      if (ways[t] == 0) continue;
      for (int v : kFaceValues) {
        if (t + static_cast<std::size_t>(v) < next.size()) next[t + static_cast<std::size_t>(v)] += ways[t];
      }
    }
    ways = std::move(next);
  }
  return ways[static_cast<std::size_t>(s)];
}

double log_gamma_factorial(double x) {
  if (!(x >= 0.0)) throw std::domain_error("log_gamma_factorial: x must be >= 0");
  if (x == 0.0 || x == 1.0) return 0.0;
  return std::lgamma(x + 1.0);
}

}  // namespace dicemax
