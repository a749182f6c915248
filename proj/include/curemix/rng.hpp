#ifndef CUREMIX_RNG_HPP
#define CUREMIX_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace curemix {

/// Deterministic random stream: mt19937_64 core with hand-rolled transforms so
/// draws are identical across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(raw() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (one deviate per pair of uniforms).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double exponential(double rate = 1.0) { return -std::log(uniform()) / rate; }

  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  /// splitmix64 finalizer; use to derive independent stream seeds.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace curemix

#endif  // CUREMIX_RNG_HPP
