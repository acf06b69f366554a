#ifndef TTSHS_RANDOM_HPP
#define TTSHS_RANDOM_HPP

#include <cstdint>
#include <random>

namespace ttshs {

/// splitmix64 finalizer; spreads low-entropy seeds over 64 bits.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream seed for one Monte Carlo path. Depends only on
/// (master_seed, path_index), so any execution schedule reproduces the
/// same per-path variates.
inline std::uint64_t path_seed(std::uint64_t master_seed,
                               std::uint64_t path_index) {
  return splitmix64(splitmix64(master_seed) ^
                    splitmix64(path_index + 0x632be59bd9b4e019ULL));
}

/// Reproducible random stream. All samplers are written against raw
/// 64-bit draws so results do not depend on standard-library
/// distribution internals. One stream per caller; not thread-safe.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform on (0, 1]; never returns 0 so log(u) is safe.
  double uniform() {
    const double u = static_cast<double>(bits() >> 11) * 0x1.0p-53;
    return 1.0 - u;
  }

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  /// Standard normal via Box-Muller; two uniforms per draw, no caching.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Gamma(shape, scale), Marsaglia-Tsang for shape >= 1 with the usual
  /// boost for shape < 1.
  double gamma(double shape, double scale);

  /// Binomial(n, 1/2) by popcount over random words; exact for any n.
  std::uint64_t binomial_half(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace ttshs

#endif  // TTSHS_RANDOM_HPP
