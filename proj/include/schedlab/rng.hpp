#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace schedlab {

/// Splittable deterministic generator used by every sampling routine.
///
/// The generator is a splitmix64 stream identified by its seed. fork(n)
/// derives an independent child stream from (seed, n) only, never from the
/// draw position, so the stream layout of a simulation is reproducible no
/// matter how many values each consumer pulls. All floating-point draws are
/// built from raw 64-bit outputs (no std::*_distribution), which keeps
/// results bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {
    // Warm the state so that nearby seeds diverge immediately.
    next_u64();
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), n >= 1. Lemire multiply-shift.
  std::uint64_t uniform_int(std::uint64_t n) {
    const auto wide = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
  }

  /// Standard normal via Box-Muller (cosine branch).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Circularly symmetric complex normal with total variance `variance`.
  std::complex<double> complex_normal(double variance = 1.0) {
    const double s = std::sqrt(variance * 0.5);
    const double re = s * normal();
    const double im = s * normal();
    return {re, im};
  }

  /// Child stream derived from (seed, stream); independent of draw history.
  [[nodiscard]] Rng fork(std::uint64_t stream) const {
    std::uint64_t s = seed_ + 0x9e3779b97f4a7c15ULL * (stream + 1);
    s ^= s >> 32;
    s *= 0xd6e8feb86659fd93ULL;
    s ^= s >> 32;
    return Rng(s);
  }

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace schedlab
