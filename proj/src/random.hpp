#pragma once

// Portable draws from mt19937_64: the standard distributions are
// implementation-defined, which would break cross-platform reproducibility.

#include <cmath>
#include <cstdint>
#include <random>

namespace geofactor::detail {

inline double uniform01(std::mt19937_64& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double exponential(std::mt19937_64& rng)
{
  return -std::log1p(-uniform01(rng));
}

/// Independent stream for the i-th task of a seeded job.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t i)
{
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (i + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return std::mt19937_64(z ^ (z >> 31));
}

} // namespace geofactor::detail
