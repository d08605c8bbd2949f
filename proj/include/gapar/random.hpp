#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gapar {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over the tag bytes.
inline std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Sub-seed for a named component: splitmix64(master ^ fnv1a(tag)), then
// mixed with an index for per-instance / per-batch streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ hash_tag(tag)) + index);
}

// Beta(a, b) as G_a / (G_a + G_b) with independent Gamma draws.
template <typename Scalar, typename Generator>
Scalar draw_beta(Scalar a, Scalar b, Generator& rng) {
  std::gamma_distribution<Scalar> ga(a, Scalar(1));
  std::gamma_distribution<Scalar> gb(b, Scalar(1));
  const Scalar x = ga(rng);
  const Scalar y = gb(rng);
  return x / (x + y);
}

}  // namespace gapar
