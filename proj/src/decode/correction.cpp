#include "decode/correction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "common/rng.hpp"

namespace rshallu::decode {

void LayerStepTrace::add(LayerStepRecord record) {
    const int idx = record.layer_index;
    records.insert_or_assign(idx, std::move(record));
}

const LayerStepRecord& LayerStepTrace::layer(int index) const {
    auto it = records.find(index);
    if (it == records.end()) throw IncompleteTraceError(index);
    return it->second;
}

void LayerStepTrace::validate() const {
    if (vocab_size == 0) throw TraceError("vocab_size must be positive");
    (void)layer(last_layer_index);
    for (const auto& [idx, rec] : records) {
        if (idx != rec.layer_index) throw TraceError("record keyed " + std::to_string(idx) + " claims layer " + std::to_string(rec.layer_index));
        if (idx < 0) throw TraceError("negative layer index " + std::to_string(idx));
        if (rec.logits.size() != vocab_size) {
            throw TraceError("layer " + std::to_string(idx) + " has " + std::to_string(rec.logits.size()) +
                             " logits, expected vocab_size " + std::to_string(vocab_size));
        }
        if (!(rec.a_v >= 0.0 && rec.a_v <= 1.0) || !(rec.a_t >= 0.0 && rec.a_t <= 1.0)) {
            throw TraceError("layer " + std::to_string(idx) + " attention mass outside [0,1]");
        }
        if (rec.a_v + rec.a_t > 1.0 + 1e-9) throw TraceError("layer " + std::to_string(idx) + " has a_v + a_t > 1");
        for (double v : rec.logits) {
            if (!std::isfinite(v)) throw TraceError("layer " + std::to_string(idx) + " has non-finite logits");
        }
    }
}

void CorrectionConfig::validate(int last_layer_index) const {
    if (!(r_p >= 0.0)) throw ConfigError("r_p must be >= 0");
    if (k_m < 1) throw ConfigError("K_m must be >= 1");
    if (k_t < 1) throw ConfigError("K_t must be >= 1");
    if (!(thred_t > 0.0 && thred_t <= 1.0)) throw ConfigError("thred_t must lie in (0, 1]");
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("r must lie in [0, 1]");
    if (!(eps_at > 0.0)) throw ConfigError("eps_at must be > 0");
    if (m_origin.empty()) throw ConfigError("m_origin must be non-empty");
    for (int l : m_origin) {
        if (l < 0) throw ConfigError("m_origin contains negative layer " + std::to_string(l));
        if (last_layer_index >= 0 && l == last_layer_index) {
            throw ConfigError("m_origin must exclude the last layer " + std::to_string(l));
        }
    }
}

double attention_balance(double a_v, double a_t, double r_p, double eps_at) {
    return a_v / std::max(a_t, eps_at) - r_p * a_t;
}

std::vector<double> softmax(std::span<const double> values) {
    std::vector<double> out(values.size());
    if (values.empty()) return out;
    const double mx = *std::max_element(values.begin(), values.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = std::exp(values[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

std::vector<std::size_t> top_k(std::span<const double> values, std::size_t k) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    k = std::min(k, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (values[a] != values[b]) return values[a] > values[b];
                          return a < b;
                      });
    idx.resize(k);
    return idx;
}

namespace {

void check_ready(const LayerStepTrace& trace, const CorrectionConfig& cfg) {
    cfg.validate(trace.last_layer_index);
    for (int l : cfg.m_origin) (void)trace.layer(l);
    trace.validate();
}

std::vector<double> blend(std::span<const double> final_logits, std::span<const double> ref, double r) {
    std::vector<double> out(final_logits.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - r) * final_logits[i] + r * ref[i];
    return out;
}

} // namespace

LayerSelection select_reference_layers(const LayerStepTrace& trace, const CorrectionConfig& cfg) {
    check_ready(trace, cfg);
    LayerSelection sel;

    const auto& last = trace.final_layer();
    const double ab_last = attention_balance(last.a_v, last.a_t, cfg.r_p, cfg.eps_at);
    sel.a_b_by_layer[trace.last_layer_index] = ab_last;

    std::vector<std::pair<double, int>> candidates;
    for (int l : std::set<int>(cfg.m_origin.begin(), cfg.m_origin.end())) {
        const auto& rec = trace.layer(l);
        const double ab = attention_balance(rec.a_v, rec.a_t, cfg.r_p, cfg.eps_at);
        sel.a_b_by_layer[l] = ab;
        if (ab > ab_last) candidates.emplace_back(ab, l);
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second > b.second;
    });
    if (candidates.size() > static_cast<std::size_t>(cfg.k_m)) candidates.resize(static_cast<std::size_t>(cfg.k_m));
    for (const auto& c : candidates) sel.stage1_layers.push_back(c.second);

    const auto final_probs = softmax(last.logits);
    for (int l : sel.stage1_layers) {
        const auto& rec = trace.layer(l);
        for (std::size_t tok : top_k(rec.logits, static_cast<std::size_t>(cfg.k_t))) {
            if (final_probs[tok] > cfg.thred_t) {
                sel.m_final.push_back(l);
                break;
            }
        }
    }
    return sel;
}

std::vector<double> layer_weights(std::span<const double> a_b_values) {
    if (a_b_values.empty()) throw EmptySelectionError();
    for (double v : a_b_values) {
        if (!std::isfinite(v)) throw TraceError("non-finite attention balance");
    }
    return softmax(a_b_values);
}

CorrectionOutcome correct_step(const LayerStepTrace& trace, const CorrectionConfig& cfg) {
    auto sel = select_reference_layers(trace, cfg);
    CorrectionOutcome out;
    out.a_b_by_layer = std::move(sel.a_b_by_layer);
    out.stage1_layers = std::move(sel.stage1_layers);
    out.m_final = std::move(sel.m_final);

    const auto& final_logits = trace.final_layer().logits;
    if (out.m_final.empty()) {
        out.corrected_logits = final_logits;
        return out;
    }

    std::vector<double> ab;
    for (int l : out.m_final) ab.push_back(out.a_b_by_layer.at(l));
    out.weights = layer_weights(ab);

    out.logit_ref.assign(trace.vocab_size, 0.0);
    for (std::size_t i = 0; i < out.m_final.size(); ++i) {
        const auto& logits = trace.layer(out.m_final[i]).logits;
        for (std::size_t t = 0; t < trace.vocab_size; ++t) out.logit_ref[t] += logits[t] * out.weights[i];
    }
    out.corrected_logits = blend(final_logits, out.logit_ref, cfg.r);
    return out;
}

CorrectionOutcome correct_step_average(const LayerStepTrace& trace, const CorrectionConfig& cfg, Rng& rng) {
    check_ready(trace, cfg);
    CorrectionOutcome out;

    std::vector<int> pool(cfg.m_origin.begin(), cfg.m_origin.end());
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    rng.shuffle(pool);
    pool.resize(std::min(pool.size(), static_cast<std::size_t>(cfg.k_m)));

    out.stage1_layers = pool;
    out.m_final = pool;
    out.weights.assign(pool.size(), 1.0 / static_cast<double>(pool.size()));
    for (int l : pool) {
        const auto& rec = trace.layer(l);
        out.a_b_by_layer[l] = attention_balance(rec.a_v, rec.a_t, cfg.r_p, cfg.eps_at);
    }
    const auto& last = trace.final_layer();
    out.a_b_by_layer[trace.last_layer_index] = attention_balance(last.a_v, last.a_t, cfg.r_p, cfg.eps_at);

    out.logit_ref.assign(trace.vocab_size, 0.0);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto& logits = trace.layer(pool[i]).logits;
        for (std::size_t t = 0; t < trace.vocab_size; ++t) out.logit_ref[t] += logits[t] * out.weights[i];
    }
    out.corrected_logits = blend(last.logits, out.logit_ref, cfg.r);
    return out;
}

} // namespace rshallu::decode
