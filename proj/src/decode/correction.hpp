#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common/error.hpp"

namespace rshallu {
class Rng;
}

namespace rshallu::decode {

// One layer's view of a single decoding step.
struct LayerStepRecord {
    int layer_index = 0;
    double a_v = 0.0; // attention mass on visual tokens
    double a_t = 0.0; // attention mass on user-instruction tokens
    std::vector<double> logits;
};

struct LayerStepTrace {
    std::map<int, LayerStepRecord> records;
    int last_layer_index = 0;
    std::size_t vocab_size = 0;

    void add(LayerStepRecord record);
    // Throws IncompleteTraceError when the layer is absent.
    const LayerStepRecord& layer(int index) const;
    const LayerStepRecord& final_layer() const { return layer(last_layer_index); }
    // Checks vocab agreement, attention ranges, finiteness.
    void validate() const;
};

struct CorrectionConfig {
    double r_p = 0.1;
    int k_m = 2;
    int k_t = 2;
    double thred_t = 0.2; // final-layer probability threshold
    double r = 0.7;       // recall rate
    std::vector<int> m_origin = {29, 30, 31};
    double eps_at = 1e-6;

    // Throws ConfigError. last_layer_index < 0 skips the m_origin/last check.
    void validate(int last_layer_index = -1) const;
};

struct CorrectionOutcome {
    std::map<int, double> a_b_by_layer; // includes the final layer
    std::vector<int> stage1_layers;     // a_b descending
    std::vector<int> m_final;           // subset of stage1, same order
    std::vector<double> weights;        // aligned with m_final
    std::vector<double> logit_ref;      // empty when m_final is empty
    std::vector<double> corrected_logits;
};

class IncompleteTraceError : public DataError {
public:
    explicit IncompleteTraceError(int layer)
        : DataError("incomplete trace: missing layer " + std::to_string(layer)), layer_(layer) {}
    int layer() const noexcept { return layer_; }

private:
    int layer_;
};

class TraceError : public DataError {
public:
    explicit TraceError(const std::string& what) : DataError("trace error: " + what) {}
};

class EmptySelectionError : public DataError {
public:
    EmptySelectionError() : DataError("empty selection: no layers to weight") {}
};

// a_v / max(a_t, eps_at) - r_p * a_t
double attention_balance(double a_v, double a_t, double r_p, double eps_at = 1e-6);

// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> values);

// Indices of the k largest values, descending; ties go to the lower index.
std::vector<std::size_t> top_k(std::span<const double> values, std::size_t k);

struct LayerSelection {
    std::vector<int> stage1_layers;
    std::vector<int> m_final;
    std::map<int, double> a_b_by_layer;
};

// Stage 1 keeps at most k_m layers of m_origin whose balance beats the final
// layer's (ties toward the deeper layer). Stage 2 keeps a candidate when any
// of its own top-k_t tokens has final-layer probability above thred_t.
LayerSelection select_reference_layers(const LayerStepTrace& trace, const CorrectionConfig& cfg);

// Softmax of the selected layers' balances.
std::vector<double> layer_weights(std::span<const double> a_b_values);

// Full correction for one step. With m_final empty the final-layer logits are
// returned unchanged.
CorrectionOutcome correct_step(const LayerStepTrace& trace, const CorrectionConfig& cfg);

// Control strategy: k_m layers drawn uniformly from m_origin, logits averaged
// with equal weight, blended at the same recall rate. No screening.
CorrectionOutcome correct_step_average(const LayerStepTrace& trace, const CorrectionConfig& cfg, Rng& rng);

} // namespace rshallu::decode
