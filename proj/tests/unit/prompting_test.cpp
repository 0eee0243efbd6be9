#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "checker/client.hpp"
#include "checker/judge.hpp"
#include "common/jsonl.hpp"
#include "datagen/datagen.hpp"
#include "prompting/strategies.hpp"

using namespace rshallu;
using namespace rshallu::prompting;

namespace {

// Compares against tests/golden/<name>; RSHALLU_UPDATE_GOLDEN=1 rewrites it.
void check_golden(const std::string& name, const std::string& actual) {
    const std::string path = std::string(RSHALLU_TEST_GOLDEN) + "/" + name;
    if (std::getenv("RSHALLU_UPDATE_GOLDEN")) {
        jsonl::write_text(path, actual);
        return;
    }
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in, "missing golden file " << path);
    std::ostringstream buf;
    buf << in.rdbuf();
    CHECK_MESSAGE(buf.str() == actual, "golden mismatch: " << name);
}

checker::ClientResponse ok(const std::string& text) { return {text, 0.0, checker::TransportStatus::Ok, ""}; }

taxonomy::QaItem sample_item() {
    taxonomy::QaItem q;
    q.id = "P0003-OE-1";
    q.image_id = "P0003";
    q.category = taxonomy::Category::ObjectExistence;
    q.question = "Is there a tennis court next to the parking lot?";
    q.answer = "No, there is a swimming pool next to the parking lot.";
    return q;
}

} // namespace

TEST_CASE("stage 1 prompt") {
    PromptPlan plan;
    plan.strategy = Strategy::Overall;
    CHECK(render_stage1(plan) ==
          "Describe the picture concisely in one sentence, including the type of land use and the main targets and "
          "their locations.");
    plan.strategy = Strategy::Combined;
    CHECK(render_stage1(plan) == kGlobalDescriptionPrompt);
    plan.strategy = Strategy::Counterfactual;
    CHECK_THROWS_AS(render_stage1(plan), PlanError);
}

TEST_CASE("final prompt per strategy") {
    PromptPlan plan;
    plan.question = "How many ships are docked?";
    plan.strategy = Strategy::None;
    CHECK(render_final(plan) == plan.question);

    plan.strategy = Strategy::Counterfactual;
    const auto cf = render_final(plan);
    CHECK(cf.rfind("You are a remote sensing expert.", 0) == 0);
    CHECK(cf.size() > plan.question.size());
    CHECK(cf.substr(cf.size() - plan.question.size()) == plan.question);

    plan.strategy = Strategy::Combined;
    CHECK_THROWS_AS(render_final(plan), SequencingError);
    plan.global_description = "An airport with two runways.";
    const auto comb = render_final(plan);
    const auto p0 = comb.find(kCounterfactualOpening);
    const auto p1 = comb.find("An airport with two runways.");
    const auto p2 = comb.find(plan.question);
    CHECK(p0 == 0);
    CHECK(p0 < p1);
    CHECK(p1 < p2);
    check_golden("combined_prompt.txt", comb + "\n");

    plan.strategy = Strategy::Overall;
    CHECK(render_final(plan) == "An airport with two runways. How many ships are docked?");
}

TEST_CASE("call counts follow the strategy") {
    for (Strategy s : {Strategy::None, Strategy::Overall, Strategy::Counterfactual, Strategy::Combined}) {
        checker::ReplayTransport replay;
        replay.add("k/stage1", ok("A harbor with ships along a pier."));
        replay.add("k/final", ok("Four."));
        const auto run = run_strategy(replay, "m", "img", "How many ships?", s, "k");
        CHECK(replay.calls() == expected_calls(s));
        CHECK(run.calls.size() == expected_calls(s));
        CHECK(run.answer == "Four.");
        if (s == Strategy::Combined || s == Strategy::Overall) {
            CHECK(replay.requests()[0].prompt == kGlobalDescriptionPrompt);
            CHECK(replay.requests()[1].prompt.find("A harbor with ships along a pier.") != std::string::npos);
        }
    }
    CHECK(expected_calls(Strategy::None) == 1);
    CHECK(expected_calls(Strategy::Counterfactual) == 1);
    CHECK(expected_calls(Strategy::Overall) == 2);
    CHECK(expected_calls(Strategy::Combined) == 2);
}

TEST_CASE("stage 1 failure aborts without a final call") {
    checker::ReplayTransport replay;
    replay.add("k/stage1", {"", 0.0, checker::TransportStatus::Error, "503"});
    replay.add("k/final", ok("x"));
    CHECK_THROWS_AS(run_strategy(replay, "m", "img", "q?", Strategy::Combined, "k"), StageOneError);
    CHECK(replay.calls() == 1);
}

TEST_CASE("global description cache is opt-in") {
    checker::ReplayTransport replay;
    replay.add("a/stage1", ok("desc"));
    replay.add("a/final", ok("x"));
    replay.add("b/final", ok("y"));
    GlobalDescriptionCache cache;
    run_strategy(replay, "m", "img", "q1?", Strategy::Overall, "a", &cache);
    const auto second = run_strategy(replay, "m", "img", "q2?", Strategy::Overall, "b", &cache);
    CHECK(second.calls.size() == 1);
    CHECK(replay.calls() == 3);
}

TEST_CASE("judge prompt goldens") {
    const auto item = sample_item();
    checker::JudgeOptions acc, pres, local;
    pres.marking = checker::Marking::Presence;
    local = checker::JudgeOptions::local_checker();
    local.use_cot = false;
    const std::string answer = "Yes, a tennis court lies east of the parking lot.";
    check_golden("judge_accuracy_cot.txt", checker::make_judge_request(item, answer, acc).rendered_prompt);
    check_golden("judge_presence_cot.txt", checker::make_judge_request(item, answer, pres).rendered_prompt);
    check_golden("judge_local_nocot.txt", checker::make_judge_request(item, answer, local).rendered_prompt);
}

TEST_CASE("generation request goldens") {
    const std::string caption = "A harbor with twelve ships docked along two piers and a road running north.";
    check_golden("gen_oe_normal.txt",
                 datagen::build_gen_request(taxonomy::Category::ObjectExistence, caption, std::nullopt,
                                            datagen::GenKind::Normal)
                     .instruction);
    check_golden("gen_oa_misleading.txt",
                 datagen::build_gen_request(taxonomy::Category::ObjectAttribute, caption, std::string("P0001.png"),
                                            datagen::GenKind::Misleading)
                     .instruction);
}
