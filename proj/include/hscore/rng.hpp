#ifndef HSCORE_RNG_HPP
#define HSCORE_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hscore {

using Rng = std::mt19937_64;

// splitmix64 finalizer; good avalanche for seed-stream derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic stream derivation: a root seed plus a path of integers
// (stream tag, replicate, particle index, epoch, ...) identifies a stream.
// Chain-hashing with splitmix64 keeps streams decorrelated.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(root ^ 0x243f6a8885a308d3ULL);
  for (std::uint64_t p : path) s = mix64(s ^ mix64(p + 0x9e3779b97f4a7c15ULL));
  return s;
}

inline Rng derive_rng(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(root, path));
}

// Stream tags used across the library; values are arbitrary but frozen so
// that seeds reproduce across versions.
namespace stream {
inline constexpr std::uint64_t kThetaInit = 1;
inline constexpr std::uint64_t kTemper = 2;
inline constexpr std::uint64_t kRejuvenate = 3;
inline constexpr std::uint64_t kXParticle = 4;
inline constexpr std::uint64_t kPmmh = 5;
inline constexpr std::uint64_t kKde = 6;
inline constexpr std::uint64_t kSimulate = 7;
inline constexpr std::uint64_t kPermutation = 8;
inline constexpr std::uint64_t kMixture = 9;
inline constexpr std::uint64_t kAdaptNx = 10;
}  // namespace stream

}  // namespace hscore

#endif
