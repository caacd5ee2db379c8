#pragma once

#include <cstdint>
#include <random>

namespace halfkfn {

using Rng = std::mt19937_64;

/// Seed for the independent stream `stream` under master seed `seed`.
/// SplitMix64 finalizer over both words, so neighbouring streams are
/// decorrelated and the mapping is stable across platforms.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    return Rng(derive_seed(seed, stream));
}

}  // namespace halfkfn
