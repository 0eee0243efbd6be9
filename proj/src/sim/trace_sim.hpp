#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "decode/correction.hpp"
#include "decode/sampling.hpp"

namespace rshallu::sim {

struct AttentionPair {
    double a_v = 0.0;
    double a_t = 0.0;
};

// A layered decoder whose middle layers prefer the correct token while the
// final layer flips to a hallucinated one.
//
// Logits live in [-10, 10]: every token gets noise in [-2, 2], the leading
// token sits at +6, strong layers push the correct token strong_margin above
// the hallucinated one and the final layer puts it flip_margin below.
// Layers missing from attention_profile get defaults that make strong layers
// more vision-focused than the final layer and other layers less.
//
// Layer indices follow hidden-state numbering: 0 is the embedding output and
// n_layers is the final layer, so a 32-layer decoder has indices 0..32.
struct FlipScenario {
    std::string name;
    int n_layers = 32;
    std::size_t vocab_size = 8;
    std::size_t correct_token = 0;
    std::size_t hallucinated_token = 1;
    std::set<int> strong_layers;
    double flip_margin = 1.0;
    double strong_margin = 3.0;
    std::map<int, AttentionPair> attention_profile;
    std::uint64_t seed = 0; // noise seed

    int last_layer() const { return n_layers; }
    AttentionPair attention(int layer) const;
    // Throws ConfigError.
    void validate() const;
};

decode::LayerStepTrace build_flip_trace(const FlipScenario& scenario, std::size_t step);

enum class Strategy { Selection, Average };

struct TranscriptStep {
    std::size_t step = 0;
    decode::LayerStepTrace trace;
    decode::CorrectionOutcome outcome;
    std::size_t baseline_token = 0;
    std::size_t corrected_token = 0;
};

struct GenerationTranscript {
    std::vector<TranscriptStep> steps;
    std::vector<std::size_t> baseline_tokens;  // r = 0
    std::vector<std::size_t> corrected_tokens; // configured r
};

struct RunOptions {
    std::size_t n_steps = 1;
    decode::DecodeMode mode = decode::DecodeMode::Greedy;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    Strategy strategy = Strategy::Selection;
};

// Baseline and corrected streams use samplers seeded identically.
GenerationTranscript run_generation(const FlipScenario& scenario, const decode::CorrectionConfig& cfg,
                                    const RunOptions& opts);

// Random flip scenario with 1..3 strong layers drawn from m_origin.
FlipScenario random_flip_scenario(std::uint64_t seed, const std::vector<int>& m_origin, int n_layers = 32,
                                  std::size_t vocab_size = 16);

struct SweepRow {
    std::string scenario;
    decode::CorrectionConfig cfg;
    bool repaired = false;
    std::size_t baseline_token = 0;
    std::size_t corrected_token = 0;
};

// First greedy step at each recall rate.
std::vector<SweepRow> sweep_recall(const FlipScenario& scenario, const decode::CorrectionConfig& cfg,
                                   const std::vector<double>& r_values, Strategy strategy, std::uint64_t seed);

// Correct token's final-layer probability exceeds thred_t and every strong
// layer is a candidate; such scenarios must be repairable at some r.
bool repair_eligible(const FlipScenario& scenario, const decode::CorrectionConfig& cfg);

nlohmann::json scenario_to_json(const FlipScenario& s);
FlipScenario scenario_from_json(const nlohmann::json& j, std::size_t line = 0);
std::vector<FlipScenario> load_scenarios(const std::filesystem::path& path);

nlohmann::json transcript_step_json(const TranscriptStep& s);
std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);

} // namespace rshallu::sim
