#include "deqpocs/rng.hpp"

#include <cmath>
#include <numbers>

namespace deqpocs {

std::uint64_t splitmix64(std::uint64_t &state)
{
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
  std::uint64_t state = seed ^ (0xd1b54a32d192ed03ULL * (stream + 1));
  splitmix64(state);
  return splitmix64(state);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
} // namespace

Rng::Rng(std::uint64_t seed)
{
  std::uint64_t state = seed;
  for (auto &s : s_) {
    s = splitmix64(state);
  }
}

std::uint64_t Rng::next()
{
  std::uint64_t const result = rotl(s_[1] * 5, 7) * 9;
  std::uint64_t const t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal()
{
  if (hasSpare_) {
    hasSpare_ = false;
    return spare_;
  }
  double const u1 = 1.0 - uniform(); // (0, 1]
  double const u2 = uniform();
  double const r = std::sqrt(-2.0 * std::log(u1));
  double const theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  hasSpare_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n)
{
  // Lemire-free rejection: discard the biased tail of the 64-bit range.
  std::uint64_t const limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t r;
  do {
    r = next();
  } while (r >= limit);
  return r % n;
}

} // namespace deqpocs
