#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "checker/client.hpp"
#include "common/error.hpp"
#include "taxonomy/taxonomy.hpp"

namespace rshallu::checker {

// presence: 1 means a hallucination is present.
// accuracy: 1 means the answer is hallucination-free and accurate.
enum class Marking { Presence, Accuracy };

std::optional<Marking> parse_marking(std::string_view s);
std::string_view to_string(Marking m);

struct JudgeOptions {
    bool use_cot = true;
    Marking marking = Marking::Accuracy;
    bool include_ground_truth = true;
    bool domain_preamble = true;

    // Compact local checker: same boundary, no ground truth.
    static JudgeOptions local_checker() {
        JudgeOptions o;
        o.include_ground_truth = false;
        return o;
    }
};

inline constexpr std::string_view kCotSentence = "Let us think step by step.";

struct JudgeRequest {
    std::string item_id;
    std::string image_ref;
    std::string question;
    std::string candidate_answer;
    std::optional<std::string> ground_truth; // present iff include_ground_truth
    std::string rendered_prompt;
};

enum class VerdictLabel { Hallucinated, Clean };

struct Verdict {
    std::string item_id;
    VerdictLabel binary = VerdictLabel::Hallucinated;
    std::string raw_response;
    bool reasoning_present = false;
};

class UnparseableVerdictError : public DataError {
public:
    explicit UnparseableVerdictError(const std::string& what) : DataError("unparseable verdict: " + what) {}
};

// Throws ConfigError if opts require a ground truth that is not supplied, and
// UsageError for an empty answer. A supplied ground truth is left out when
// opts.include_ground_truth is false.
std::string build_judge_prompt(const taxonomy::QaItem& item, std::string_view answer,
                               const std::optional<std::string>& ground_truth, const JudgeOptions& opts);

// Uses the item's reference answer as ground truth when opts ask for one.
JudgeRequest make_judge_request(const taxonomy::QaItem& item, std::string_view answer, const JudgeOptions& opts);

// Takes the last "Mark:"/"Score:" field, else the last standalone 0 or 1.
Verdict parse_verdict(std::string_view raw, const JudgeOptions& opts, std::string item_id = {});

// clean <-> 1.0, hallucinated <-> 0.0
taxonomy::Score to_score(VerdictLabel v);
VerdictLabel from_score(taxonomy::Score s);

struct BatchEntry {
    taxonomy::QaItem item;
    std::string model_name; // model whose answer is judged
    std::string answer;
};

struct BatchPolicy {
    int max_retries = 2;
    int concurrency_limit = 4;
    std::chrono::milliseconds backoff_base{100};
};

struct Unjudged {
    std::string item_id;
    std::string model_name;
    std::string reason;
    int attempts = 0;
};

struct BatchResult {
    std::vector<Verdict> verdicts;        // sorted by (model, item)
    std::vector<taxonomy::Judgment> judgments;
    std::vector<Unjudged> unjudged;
};

std::string judge_request_id(std::string_view model_name, std::string_view item_id);

// Judges each entry once. Transport errors and unparseable replies are
// retried with exponential backoff; entries still failing are reported as
// unjudged and never scored.
BatchResult judge_batch(std::span<const BatchEntry> entries, ModelClient& client, const JudgeOptions& opts,
                        const BatchPolicy& policy, const std::string& judge_model);

} // namespace rshallu::checker
