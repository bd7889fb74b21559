/** @file rng.hpp
 *  @brief Counter-based stream derivation for reproducible sampling.
 */
#pragma once

#include <cstdint>
#include <random>

namespace qbsde {

/// splitmix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Seed for stream `index` derived from a master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Engine for one independent stream.
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(derive_seed(seed, index));
}

}  // namespace qbsde
