#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "common/rng.hpp"

namespace rshallu::decode {

enum class DecodeMode { Greedy, Sample };

std::optional<DecodeMode> parse_decode_mode(std::string_view s);
std::string_view to_string(DecodeMode m);

// Lowest index among the maxima.
std::size_t argmax(std::span<const double> logits);

// Per-session sampler. Owns its generator; never share one across sessions.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    std::size_t next(std::span<const double> logits, DecodeMode mode, double temperature = 1.0);

private:
    Rng rng_;
};

// One-shot draw with a fresh generator seeded by rng_seed.
std::size_t decode_next(std::span<const double> logits, DecodeMode mode, double temperature, std::uint64_t rng_seed);

} // namespace rshallu::decode
