#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hcsbc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform integer in [0, range). The std distributions are
// implementation-defined; this is not, so seeded output is portable.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t range) {
  const std::uint64_t limit = (0 - range) % range;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= limit) return r % range;
  }
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

template <class T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = std::size_t(bounded(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace hcsbc
