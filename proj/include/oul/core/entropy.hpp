#pragma once

#include <cmath>

namespace oul {

/// Base-2 entropy of a Bernoulli(p) distribution, 0 log 0 := 0. Lies in [0, 1].
inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

}  // namespace oul
