#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace checkerboard {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed for a named randomness domain ("sampling", "init", "dropout", "ga", ...)
/// derived from one root seed, so components stay reproducible independently.
constexpr std::uint64_t domain_seed(std::uint64_t root, std::string_view domain) noexcept {
  return splitmix64(root ^ splitmix64(fnv1a(domain)));
}

/// Seed for the i-th item of a stream; independent of scheduling.
constexpr std::uint64_t indexed_seed(std::uint64_t stream_seed, std::uint64_t index) noexcept {
  return splitmix64(stream_seed + splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) from the top 53 bits; portable across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection; portable across standard libraries.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

}  // namespace checkerboard
