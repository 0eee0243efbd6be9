#pragma once

// Independent reference implementations used only by the tests. Written as
// plain loops over the definitions, without calling anything in decode/.

#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "decode/correction.hpp"

namespace oracle {

inline double balance(const rshallu::decode::LayerStepRecord& r, const rshallu::decode::CorrectionConfig& c) {
    double at = r.a_t;
    if (at < c.eps_at) at = c.eps_at;
    return r.a_v / at - c.r_p * r.a_t;
}

// Layers surviving both selection stages, in no particular order.
inline std::vector<int> selected_layers(const rshallu::decode::LayerStepTrace& t,
                                        const rshallu::decode::CorrectionConfig& c) {
    const auto& fin = t.records.at(t.last_layer_index);
    const double ab_last = balance(fin, c);

    std::set<int> origin(c.m_origin.begin(), c.m_origin.end());
    std::vector<int> beat;
    for (int l : origin) {
        if (balance(t.records.at(l), c) > ab_last) beat.push_back(l);
    }
    // rank = number of rivals strictly ahead; equal balances favour the deeper layer
    std::vector<int> stage1;
    for (int l : beat) {
        const double mine = balance(t.records.at(l), c);
        int ahead = 0;
        for (int m : beat) {
            const double theirs = balance(t.records.at(m), c);
            if (theirs > mine || (theirs == mine && m > l)) ++ahead;
        }
        if (ahead < c.k_m) stage1.push_back(l);
    }

    const std::size_t v = fin.logits.size();
    double z = 0.0;
    for (std::size_t i = 0; i < v; ++i) z += std::exp(fin.logits[i]);
    std::vector<int> kept;
    for (int l : stage1) {
        const auto& x = t.records.at(l).logits;
        bool keep = false;
        for (std::size_t i = 0; i < v; ++i) {
            int ahead = 0;
            for (std::size_t j = 0; j < v; ++j) {
                if (x[j] > x[i] || (x[j] == x[i] && j < i)) ++ahead;
            }
            if (ahead < c.k_t && std::exp(fin.logits[i]) / z > c.thred_t) keep = true;
        }
        if (keep) kept.push_back(l);
    }
    return kept;
}

inline std::vector<double> corrected(const rshallu::decode::LayerStepTrace& t,
                                     const rshallu::decode::CorrectionConfig& c) {
    const auto& fin = t.records.at(t.last_layer_index).logits;
    const auto layers = selected_layers(t, c);
    if (layers.empty()) return fin;

    double z = 0.0;
    for (int l : layers) z += std::exp(balance(t.records.at(l), c));
    std::vector<double> ref(fin.size(), 0.0);
    for (int l : layers) {
        const double w = std::exp(balance(t.records.at(l), c)) / z;
        for (std::size_t i = 0; i < fin.size(); ++i) ref[i] += w * t.records.at(l).logits[i];
    }
    std::vector<double> out(fin.size());
    for (std::size_t i = 0; i < fin.size(); ++i) out[i] = (1.0 - c.r) * fin[i] + c.r * ref[i];
    return out;
}

struct Case {
    rshallu::decode::LayerStepTrace trace;
    rshallu::decode::CorrectionConfig cfg;
};

// Random small trace (<= 8 layers, vocab <= 32) with a config that fits it.
// Attention values and logits are quantized now and then so that ties occur.
inline Case random_case(std::uint64_t seed) {
    std::mt19937_64 g(seed);
    auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); };
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); };

    Case c;
    const int n_layers = pick(2, 8);
    const std::size_t vocab = static_cast<std::size_t>(pick(2, 32));
    const bool coarse = pick(0, 3) == 0;
    c.trace.last_layer_index = n_layers - 1;
    c.trace.vocab_size = vocab;
    for (int l = 0; l < n_layers; ++l) {
        rshallu::decode::LayerStepRecord r;
        r.layer_index = l;
        r.a_t = uni(0.05, 0.6);
        r.a_v = uni(0.0, 1.0 - r.a_t);
        if (coarse) {
            r.a_t = 0.1 * (1 + pick(0, 4));
            r.a_v = 0.1 * pick(0, 4);
        }
        r.logits.resize(vocab);
        for (double& x : r.logits) x = coarse ? static_cast<double>(pick(-3, 3)) : uni(-6.0, 6.0);
        c.trace.add(std::move(r));
    }
    c.cfg.m_origin.clear();
    for (int l = 0; l < n_layers - 1; ++l) {
        if (pick(0, 2) > 0) c.cfg.m_origin.push_back(l);
    }
    if (c.cfg.m_origin.empty()) c.cfg.m_origin.push_back(pick(0, n_layers - 2));
    c.cfg.r_p = uni(0.0, 0.5);
    c.cfg.k_m = pick(1, 3);
    c.cfg.k_t = pick(1, 3);
    c.cfg.thred_t = uni(0.02, 0.5);
    c.cfg.r = uni(0.0, 1.0);
    return c;
}

} // namespace oracle
