#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace rshallu {

// SplitMix64 finalizer; derives independent sub-seeds from (seed, key).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (key + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seeded generator whose derived draws are identical on every platform.
// std::mt19937_64's raw stream is fixed by the standard, but the std
// distributions and std::shuffle are not, so the mappings live here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform in [0, n). n must be > 0.
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    template <class T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[index(i)]);
        }
    }

    template <class T>
    void shuffle(std::vector<T>& values) {
        shuffle(std::span<T>(values));
    }

private:
    std::mt19937_64 engine_;
};

} // namespace rshallu
