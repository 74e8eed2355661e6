// Seeded random streams.
//
// Every stochastic choice in the simulator draws from an Rng whose seed is
// derived from the master seed plus a path of counters (round, agent, ...).
// Sub-streams are independent of each other, so adding an agent never
// perturbs the draws of the agents that already exist.
//
// The generator is splitmix64 and the distributions are implemented here
// rather than with <random> distributions, whose output is
// implementation-defined across standard libraries.

#pragma once

#include <cstdint>
#include <initializer_list>

namespace crsim {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Derive a sub-stream seed from a master seed and a path of counters.
inline constexpr std::uint64_t derive_seed(std::uint64_t master,
                                           std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632BE59BD9B4E019ull));
  return h;
}

// Reserved stream identifiers (agent streams use the agent index).
inline constexpr std::uint64_t kTopologyStream = 0xFFFF'FFFF'0000'0001ull;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept {
    // Rejection sampling keeps the draw exactly uniform.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace crsim
