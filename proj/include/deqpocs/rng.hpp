#pragma once

#include <array>
#include <cstdint>

namespace deqpocs {

/*
 * xoshiro256** seeded through splitmix64. All randomness in the project flows
 * through this generator so that datasets and checkpoints are reproducible
 * across platforms. Gaussian draws use the Box-Muller transform on the same
 * stream (one pair per two uniforms, second value cached).
 */
class Rng
{
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  double uniform();                     // [0, 1), 53-bit resolution
  double uniform(double lo, double hi); // [lo, hi)
  double normal();                      // N(0, 1)
  std::uint64_t below(std::uint64_t n); // [0, n), unbiased

private:
  std::array<std::uint64_t, 4> s_;
  bool hasSpare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t &state);

// Independent child seed for stream `stream` of a parent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace deqpocs
