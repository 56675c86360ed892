#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace dicemax {

/// ln sum exp(x_i), summed in index order. -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

/// Round half to even at one decimal of a percentage.
double round_percent(double probability);

}  // namespace dicemax
