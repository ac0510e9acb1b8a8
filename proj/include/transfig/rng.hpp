#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

namespace transfig {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                       std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stateless seed derivation: every random draw in a run is keyed by
// (run seed, stream name, counters), so resuming at step N needs no RNG
// state beyond the counters themselves.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stream,
                                 std::initializer_list<std::uint64_t> counters = {}) {
  std::uint64_t h = splitmix64(base ^ fnv1a64(stream));
  for (std::uint64_t c : counters) h = splitmix64(h ^ splitmix64(c));
  return h;
}

inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

}  // namespace transfig
