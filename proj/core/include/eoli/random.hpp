#pragma once

#include <cstdint>
#include <initializer_list>

namespace eoli {

/// SplitMix64 generator (Steele, Lea & Flood). Chosen over the <random>
/// engines/distributions because its output and the derived uniform/normal
/// draws below are fully specified, so seeded results agree across standard
/// library implementations.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_{seed} {}

    std::uint64_t next() noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept;

    /// Unbiased integer in [0, bound) by rejection; bound must be > 0.
    std::uint64_t uniform_index(std::uint64_t bound) noexcept;

    /// Standard normal via Box-Muller (the sine branch is discarded).
    double normal() noexcept;

private:
    std::uint64_t state_;
};

/// SplitMix64 finalizer applied to a single word.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed from a base seed and a path of indices,
/// e.g. derive_seed(seed, {tree_index}) or derive_seed(seed, {iteration, column}).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept;

} // namespace eoli
