#include "ttshs/random.hpp"

#include <bit>
#include <cmath>

namespace ttshs {

double RandomStream::gamma(double shape, double scale) {
  if (shape < 1.0) {
    // Boost: Gamma(a) = Gamma(a+1) * U^(1/a).
    const double u = uniform();
    return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return scale * d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return scale * d * v;
  }
}

std::uint64_t RandomStream::binomial_half(std::uint64_t n) {
  std::uint64_t successes = 0;
  while (n >= 64) {
    successes += std::popcount(bits());
    n -= 64;
  }
  if (n > 0) {
    const std::uint64_t mask = (n == 64) ? ~0ULL : ((1ULL << n) - 1ULL);
    successes += std::popcount(bits() & mask);
  }
  return successes;
}

}  // namespace ttshs
