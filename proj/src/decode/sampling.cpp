#include "decode/sampling.hpp"

#include <algorithm>
#include <vector>

#include "common/error.hpp"
#include "decode/correction.hpp"

namespace rshallu::decode {

std::optional<DecodeMode> parse_decode_mode(std::string_view s) {
    if (s == "greedy") return DecodeMode::Greedy;
    if (s == "sample") return DecodeMode::Sample;
    return std::nullopt;
}

std::string_view to_string(DecodeMode m) { return m == DecodeMode::Greedy ? "greedy" : "sample"; }

std::size_t argmax(std::span<const double> logits) {
    if (logits.empty()) throw TraceError("argmax of empty logits");
    return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

std::size_t Sampler::next(std::span<const double> logits, DecodeMode mode, double temperature) {
    if (mode == DecodeMode::Greedy) return argmax(logits);
    if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");

    std::vector<double> scaled(logits.begin(), logits.end());
    for (double& v : scaled) v /= temperature;
    const auto probs = softmax(scaled);

    const double u = rng_.uniform01();
    double cum = 0.0;
    std::size_t last_nonzero = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) last_nonzero = i;
        cum += probs[i];
        if (u < cum) return i;
    }
    // u landed in the rounding slack above the cumulative sum.
    return last_nonzero;
}

std::size_t decode_next(std::span<const double> logits, DecodeMode mode, double temperature, std::uint64_t rng_seed) {
    Sampler s(rng_seed);
    return s.next(logits, mode, temperature);
}

} // namespace rshallu::decode
