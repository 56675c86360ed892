#pragma once

#include <array>
#include <cmath>
#include <random>

#include "dicemax/core.hpp"
#include "dicemax/numeric.hpp"

namespace dicemax::testing {

inline std::array<double, kFaces> rounded_percent(const Distribution& d) {
  std::array<double, kFaces> out;
  for (int i = 0; i < kFaces; ++i) out[i] = round_percent(d[i]);
  return out;
}

inline double max_pp_gap(const Distribution& d, const std::array<double, kFaces>& percent) {
  double gap = 0.0;
  for (int i = 0; i < kFaces; ++i) gap = std::max(gap, std::abs(100.0 * d[i] - percent[i]));
  return gap;
}

inline double max_abs_gap(const Distribution& x, const Distribution& y) {
  double gap = 0.0;
  for (int i = 0; i < kFaces; ++i) gap = std::max(gap, std::abs(x[i] - y[i]));
  return gap;
}

inline Distribution random_distribution(std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Probs w;
  for (auto& x : w) x = e(rng);
  return Distribution::from_weights(w);
}

// Random direction d with sum d = 0 and v . d = 0.
inline Probs feasible_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Probs d;
  for (auto& x : d) x = g(rng);
  // Gram-Schmidt against the orthonormalized constraint rows.
  Probs one, v;
  for (int i = 0; i < kFaces; ++i) {
    one[i] = 1.0 / std::sqrt(6.0);
    v[i] = (i + 1) - 3.5;
  }
  double vn = 0.0;
  for (double x : v) vn += x * x;
  for (auto& x : v) x /= std::sqrt(vn);
  for (const auto& basis : {one, v}) {
    double dot = 0.0;
    for (int i = 0; i < kFaces; ++i) dot += d[i] * basis[i];
    for (int i = 0; i < kFaces; ++i) d[i] -= dot * basis[i];
  }
  return d;
}

}  // namespace dicemax::testing
