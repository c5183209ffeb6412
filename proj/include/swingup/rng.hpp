#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace swingup {

/// Deterministic random source. All draws are derived from a 64-bit Mersenne
/// Twister with hand-written transforms, so streams are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Mixes a base seed with a list of stream identifiers into an independent seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> streams);

}  // namespace swingup
