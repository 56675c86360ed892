#include "dicemax/numeric.hpp"

namespace dicemax {

double round_percent(double probability) {
  const double tenths = probability * 1000.0;
  const double below = std::floor(tenths);
  // Values within 1e-9 of a tie are treated as exact ties (5/16 -> 31.2).
  if (std::abs(tenths - below - 0.5) < 1e-9) {
    const double even = std::fmod(below, 2.0) == 0.0 ? below : below + 1.0;
    return even / 10.0;
  }
  return std::round(tenths) / 10.0;
}

}  // namespace dicemax
