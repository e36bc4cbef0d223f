#ifndef COLLAPSE_LAB_RANDOM_HPP_
#define COLLAPSE_LAB_RANDOM_HPP_

#include <cstdint>
#include <random>

namespace collapse_lab {

/// SplitMix64 finalizer; used to derive independent seeds from structured keys.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream-splitting rule: stream `index` of `seed` is mt19937_64 seeded with
/// mix64(seed ^ mix64(index)). Each embedding row draws from its own stream.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(mix64(seed ^ mix64(index)));
}

}  // namespace collapse_lab

#endif  // COLLAPSE_LAB_RANDOM_HPP_
