#include "prompting/strategies.hpp"

namespace rshallu::prompting {

std::optional<Strategy> parse_strategy(std::string_view s) {
    if (s == "none") return Strategy::None;
    if (s == "overall") return Strategy::Overall;
    if (s == "counterfactual") return Strategy::Counterfactual;
    if (s == "combined") return Strategy::Combined;
    return std::nullopt;
}

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::None: return "none";
        case Strategy::Overall: return "overall";
        case Strategy::Counterfactual: return "counterfactual";
        case Strategy::Combined: return "combined";
    }
    return "?";
}

bool uses_global_description(Strategy s) { return s == Strategy::Overall || s == Strategy::Combined; }

std::size_t expected_calls(Strategy s) { return uses_global_description(s) ? 2 : 1; }

std::string render_stage1(const PromptPlan& plan) {
    if (!uses_global_description(plan.strategy)) {
        throw PlanError("strategy '" + std::string(to_string(plan.strategy)) + "' has no stage 1");
    }
    return plan.p_g;
}

namespace {

std::string apply_prefix(const std::string& tmpl, const std::string& input) {
    constexpr std::string_view slot = "{input}";
    const auto at = tmpl.find(slot);
    if (at == std::string::npos) return tmpl + " " + input;
    std::string out = tmpl;
    out.replace(at, slot.size(), input);
    return out;
}

} // namespace

std::string render_final(const PromptPlan& plan) {
    if (uses_global_description(plan.strategy) && !plan.global_description) {
        throw SequencingError("strategy '" + std::string(to_string(plan.strategy)) + "' needs the stage-1 description first");
    }
    switch (plan.strategy) {
        case Strategy::None: return plan.question;
        case Strategy::Counterfactual: return apply_prefix(plan.prefix_template, plan.question);
        case Strategy::Overall: return *plan.global_description + " " + plan.question;
        case Strategy::Combined: return apply_prefix(plan.prefix_template, *plan.global_description + " " + plan.question);
    }
    return plan.question;
}

std::optional<std::string> GlobalDescriptionCache::find(const std::string& image_ref) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(image_ref);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void GlobalDescriptionCache::store(const std::string& image_ref, const std::string& description) {
    std::lock_guard lock(mu_);
    entries_.insert_or_assign(image_ref, description);
}

StrategyRun run_strategy(checker::ModelClient& client, const std::string& model_name, const std::string& image_ref,
                         const std::string& question, Strategy strategy, const std::string& request_key,
                         GlobalDescriptionCache* cache) {
    PromptPlan plan;
    plan.strategy = strategy;
    plan.question = question;
    plan.image_ref = image_ref;
    StrategyRun run;

    if (uses_global_description(strategy)) {
        std::optional<std::string> cached = cache ? cache->find(image_ref) : std::nullopt;
        if (cached) {
            plan.global_description = *cached;
        } else {
            CallRecord call{"stage1", request_key + "/stage1", render_stage1(plan), ""};
            const auto resp = client.complete({call.request_id, model_name, image_ref, call.prompt});
            if (resp.status != checker::TransportStatus::Ok) throw StageOneError(resp.error);
            call.response = resp.text;
            plan.global_description = resp.text;
            if (cache) cache->store(image_ref, resp.text);
            run.calls.push_back(std::move(call));
        }
    }

    CallRecord call{"final", request_key + "/final", render_final(plan), ""};
    const auto resp = client.complete({call.request_id, model_name, image_ref, call.prompt});
    if (resp.status != checker::TransportStatus::Ok) throw TransportError("final-stage failure: " + resp.error);
    call.response = resp.text;
    run.answer = resp.text;
    run.calls.push_back(std::move(call));
    return run;
}

} // namespace rshallu::prompting
