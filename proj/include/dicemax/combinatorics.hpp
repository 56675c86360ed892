#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <vector>

#include "dicemax/core.hpp"

namespace dicemax {

using BigInt = boost::multiprecision::cpp_int;

/// All frequency vectors of N throws whose pips sum to a*N, in lexicographic
/// order of their counts.
struct ConstraintSet {
  int n = 0;
  std::int64_t target_sum = 0;
  std::vector<FrequencyVector> members;

  bool empty() const { return members.empty(); }
};

/// Empty when a*N is not an integer or no composition reaches it.
ConstraintSet enumerate_constrained_frequencies(int n, const Average& a);
/// Same, for an explicit pip total.
ConstraintSet enumerate_frequencies_with_sum(int n, std::int64_t pip_total);

/// ln( N! / prod N_i! ).
double log_multinomial(const FrequencyVector& nv);

/// Number of ordered N-tuples over {1..6} whose sum is s.
BigInt count_sequences(int n, std::int64_t s);

/// ln Gamma(x + 1), i.e. ln x! extended to real x >= 0.
/// Throws std::domain_error for x < 0.
double log_gamma_factorial(double x);

}  // namespace dicemax
