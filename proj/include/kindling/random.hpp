#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace kindling {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derives a child seed from a base seed and a sequence of stream indices.
inline std::uint64_t mix_seed(std::uint64_t base, std::initializer_list<std::uint64_t> streams) noexcept {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t s : streams) h = splitmix64(h ^ splitmix64(s + 0x632BE59BD9B4E019ULL));
  return h;
}

// Uniform double in [0, 1) with 53 random bits. The engine is fully specified
// by the standard; the conversion below avoids the implementation-defined
// std::uniform_real_distribution so draws are identical across platforms.
inline double uniform01(std::mt19937_64& engine) noexcept {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

inline double uniform01(std::uint64_t seed) noexcept {
  std::mt19937_64 engine(splitmix64(seed));
  return uniform01(engine);
}

}  // namespace kindling
