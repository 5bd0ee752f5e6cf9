#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace diraclab {

/// Stream seed derived from (seed, purpose tag, index). Streams with
/// different tags or indices are unrelated, so adding a consumer never
/// shifts the numbers another consumer sees.
std::uint64_t stream_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index) noexcept;

inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  return std::mt19937_64(stream_seed(seed, tag, index));
}

/// Uniform double in [0, 1) with 53 random bits; independent of the
/// standard library's distribution implementation.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace diraclab
