#include "oracle.hpp"

#include <optional>
#include <stdexcept>
#include <string>

namespace dicemax::oracle {

namespace {

BigInt factorial(int n) {
  BigInt f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Rising product (x)(x+1)...(x+k-1) = (x+k-1)!/(x-1)!.
BigInt rising(int x, int k) {
  BigInt r = 1;
  for (int i = 0; i < k; ++i) r *= x + i;
  return r;
}

std::optional<int> target_sum(int n, const Average& a) {
  if ((a.numerator() * n) % a.denominator() != 0) return std::nullopt;
  return static_cast<int>(a.numerator() * n / a.denominator());
}

RationalRow from_census(const SequenceCensus& c, const Average& a, Throw t) {
  const auto s = target_sum(c.n, a);
  if (!s || *s < c.n || *s > 6 * c.n || c.per_sum[static_cast<std::size_t>(*s)] == 0) {
    throw ContradictoryData("undefined (contradictory data)");
  }
  RationalRow row;
  for (int f = 0; f < kFaces; ++f) {
    row[f] = t == Throw::New ? Rational(1, kFaces)
                             : Rational(c.first_face[static_cast<std::size_t>(*s)][f], c.per_sum[static_cast<std::size_t>(*s)]);
  }
  return row;
}

}  // namespace

BigInt SequenceCensus::total() const {
  BigInt t = 0;
  for (const auto& v : per_sum) t += v;
  return t;
}

SequenceCensus SequenceCensus::build(int n) {
  if (n < 1 || n > 8) throw std::domain_error("census: 1 <= N <= 8");
  // ways[k][s]: sequences of k throws summing to s.
  std::vector<std::vector<BigInt>> ways(static_cast<std::size_t>(n + 1), std::vector<BigInt>(static_cast<std::size_t>(6 * n + 1), 0));
  ways[0][0] = 1;
  for (int k = 1; k <= n; ++k)
    for (int s = 0; s <= 6 * n; ++s)
      for (int f = 1; f <= 6 && f <= s; ++f) ways[k][s] += ways[k - 1][s - f];
  SequenceCensus c;
  c.n = n;
  c.per_sum = ways[n];
  c.first_face.assign(static_cast<std::size_t>(6 * n + 1), {});
  for (int s = 0; s <= 6 * n; ++s)
    for (int f = 1; f <= 6 && f <= s; ++f) c.first_face[s][f - 1] = ways[n - 1][s - f];
  return c;
}

SequenceCensus SequenceCensus::build_literal(int n) {
  if (n < 1 || n > 6) throw std::domain_error("literal census: 1 <= N <= 6");
  SequenceCensus c;
  c.n = n;
  c.per_sum.assign(static_cast<std::size_t>(6 * n + 1), 0);
  c.first_face.assign(static_cast<std::size_t>(6 * n + 1), {});
  std::vector<int> seq(static_cast<std::size_t>(n), 1);
  while (true) {
    int s = 0;
    for (int x : seq) s += x;
    c.per_sum[s] += 1;
    c.first_face[s][seq[0] - 1] += 1;
    int i = 0;
    while (i < n && seq[i] == 6) seq[i++] = 1;
    if (i == n) break;
    ++seq[i];
  }
  return c;
}

RationalRow brute_force_fair(int n, const Average& a, Throw t) { return from_census(SequenceCensus::build(n), a, t); }

RationalRow brute_force_fair_literal(int n, const Average& a, Throw t) {
  return from_census(SequenceCensus::build_literal(n), a, t);
}

RationalRow exact_johnson(int n, const Average& a, int K, Throw t) {
  if (K < 1) throw std::domain_error("exact_johnson: integer K >= 1");
  const auto s = target_sum(n, a);
  if (!s) throw ContradictoryData("undefined (contradictory data)");
  Rational total = 0;
  RationalRow num;
  for (auto& x : num) x = 0;
  bool any = false;
  // Independent enumeration: six nested count loops.
  for (int c1 = 0; c1 <= n; ++c1)
    for (int c2 = 0; c1 + c2 <= n; ++c2)
      for (int c3 = 0; c1 + c2 + c3 <= n; ++c3)
        for (int c4 = 0; c1 + c2 + c3 + c4 <= n; ++c4)
          for (int c5 = 0; c1 + c2 + c3 + c4 + c5 <= n; ++c5) {
            const int c6 = n - c1 - c2 - c3 - c4 - c5;
            const int c[6] = {c1, c2, c3, c4, c5, c6};
            int pips = 0;
            for (int f = 0; f < 6; ++f) pips += (f + 1) * c[f];
            if (pips != *s) continue;
            any = true;
            // prod (N_l + K - 1)! / N_l!, divided by the common ((K-1)!)^6.
            BigInt w = 1;
            for (int f = 0; f < 6; ++f) w *= rising(K, c[f]);
            BigInt denom = 1;
            for (int f = 0; f < 6; ++f) denom *= factorial(c[f]);
            const Rational weight(w, denom);
            total += weight;
            for (int f = 0; f < 6; ++f) {
              num[f] += t == Throw::Old ? weight * Rational(c[f], n) : weight * Rational(c[f] + K, n + 6 * K);
            }
          }
  if (!any) throw ContradictoryData("undefined (contradictory data)");
  RationalRow row;
  for (int f = 0; f < 6; ++f) row[f] = num[f] / total;
  return row;
}

Probs to_double(const RationalRow& row) {
  Probs p;
  for (int f = 0; f < kFaces; ++f) p[f] = row[f].convert_to<double>();
  return p;
}

}  // namespace dicemax::oracle
