#include "eoli/random.hpp"

#include <cmath>
#include <numbers>

namespace eoli {

namespace {
constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t SplitMix64::next() noexcept {
    state_ += golden_gamma;
    return mix64(state_);
}

double SplitMix64::uniform01() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t SplitMix64::uniform_index(std::uint64_t bound) noexcept {
    // 2^64 mod bound; draws below it would over-represent small residues
    const std::uint64_t threshold = (std::uint64_t{0} - bound) % bound;
    std::uint64_t draw = next();
    while (draw < threshold) {
        draw = next();
    }
    return draw % bound;
}

double SplitMix64::normal() noexcept {
    double u1 = uniform01();
    while (u1 <= 0.0) {
        u1 = uniform01();
    }
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(base);
    for (std::uint64_t step : path) {
        h = mix64(h ^ mix64(step + golden_gamma));
    }
    return h;
}

} // namespace eoli
