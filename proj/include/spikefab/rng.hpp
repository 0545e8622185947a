#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace spikefab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives an independent generator for a (seed, tag, n) stream, e.g.
// ("weights", layer) or ("shuffle", epoch).
inline std::mt19937 make_rng(std::uint64_t seed, std::string_view tag,
                             std::uint64_t n = 0) {
  std::uint64_t h = splitmix64(seed);
  for (char c : tag) h = splitmix64(h ^ static_cast<std::uint8_t>(c));
  h = splitmix64(h ^ n);
  return std::mt19937(static_cast<std::uint32_t>(h));
}

}  // namespace spikefab
