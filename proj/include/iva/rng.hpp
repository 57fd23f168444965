#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace iva {

// Finalizer from the splitmix64 generator. Bijective, strongly mixing.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Seed of an independent substream identified by (seed, tag, index).
// Distinct tags or indices give decorrelated streams, so consumers can draw
// from their own stream in any order without perturbing the others.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::string_view tag,
                                        std::uint64_t index = 0) {
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ull);
  h = mix64(h ^ fnv1a(tag));
  h = mix64(h ^ (index + 0x9e3779b97f4a7c15ull));
  return h;
}

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::string_view tag,
                                  std::uint64_t index = 0) {
  return std::mt19937_64(derive_stream_seed(seed, tag, index));
}

}  // namespace iva
