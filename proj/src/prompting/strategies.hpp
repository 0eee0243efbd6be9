#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "checker/client.hpp"
#include "common/error.hpp"

namespace rshallu::prompting {

enum class Strategy { None, Overall, Counterfactual, Combined };

std::optional<Strategy> parse_strategy(std::string_view s);
std::string_view to_string(Strategy s);

// Stage-1 prompt for a one-sentence global description.
inline constexpr std::string_view kGlobalDescriptionPrompt =
    "Describe the picture concisely in one sentence, including the type of land use and the main targets and their "
    "locations.";

// {input} receives the question, or the global description plus question.
inline constexpr std::string_view kCounterfactualTemplate =
    "You are a remote sensing expert. Please answer the following question. Note that the question may contain "
    "counterfactual information, such as objects that do not exist in the image or attributes that are inconsistent "
    "with the image: {input}";

inline constexpr std::string_view kCounterfactualOpening = "You are a remote sensing expert.";

struct PromptPlan {
    Strategy strategy = Strategy::None;
    std::string p_g = std::string(kGlobalDescriptionPrompt);
    std::string prefix_template = std::string(kCounterfactualTemplate);
    std::string question;
    std::optional<std::string> global_description;
    std::string image_ref;
};

class PlanError : public UsageError {
public:
    explicit PlanError(const std::string& what) : UsageError("plan error: " + what) {}
};

class SequencingError : public UsageError {
public:
    explicit SequencingError(const std::string& what) : UsageError("sequencing error: " + what) {}
};

class StageOneError : public TransportError {
public:
    explicit StageOneError(const std::string& what) : TransportError("stage-1 failure: " + what) {}
};

bool uses_global_description(Strategy s);
std::size_t expected_calls(Strategy s);

std::string render_stage1(const PromptPlan& plan);
// Order under the combined strategy: counterfactual prefix, global
// description, question.
std::string render_final(const PromptPlan& plan);

struct CallRecord {
    std::string stage; // "stage1" or "final"
    std::string request_id;
    std::string prompt;
    std::string response;
};

struct StrategyRun {
    std::string answer;
    std::vector<CallRecord> calls;
};

// Opt-in reuse of stage-1 descriptions across questions on one image.
class GlobalDescriptionCache {
public:
    std::optional<std::string> find(const std::string& image_ref) const;
    void store(const std::string& image_ref, const std::string& description);

private:
    mutable std::mutex mu_;
    std::map<std::string, std::string> entries_;
};

// request_key prefixes the request ids ("<key>/stage1", "<key>/final").
// A failed stage 1 aborts with StageOneError; there is no fallback.
StrategyRun run_strategy(checker::ModelClient& client, const std::string& model_name, const std::string& image_ref,
                         const std::string& question, Strategy strategy, const std::string& request_key,
                         GlobalDescriptionCache* cache = nullptr);

} // namespace rshallu::prompting
