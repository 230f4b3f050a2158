#pragma once

// Seedable, platform-stable randomness.
//
// RandomSource is an immutable seed descriptor that can be shared freely
// between workers. Draws come from a Generator obtained from it. Child
// streams are derived by mixing the parent seed with a stream id, so every
// shard, repetition and test draw owns an independent, reproducible stream.
//
// std::mt19937_64 output is fixed by the standard, but the std::*_distribution
// adaptors are not, so bounded integers, uniforms, normals and shuffles are
// implemented here on top of the raw 64-bit output.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace pvq {

/// SplitMix64 finalizer; used for seed derivation only.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class Generator {
public:
    explicit Generator(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        // Rejection keeps the draw unbiased and independent of the stdlib.
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

class RandomSource {
public:
    /// Recorded in every output's metadata. Bump the version when draws change.
    static constexpr std::string_view algorithm = "mt19937_64+splitmix64-derive/v1";

    explicit RandomSource(std::uint64_t seed) noexcept : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    RandomSource derive(std::uint64_t stream) const noexcept {
        return RandomSource(mix64(seed_ ^ mix64(stream)));
    }

    Generator generator() const { return Generator(seed_); }

    friend bool operator==(const RandomSource&, const RandomSource&) = default;

private:
    std::uint64_t seed_;
};

} // namespace pvq
