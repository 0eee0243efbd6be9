#include <doctest.h>

#include "common/error.hpp"
#include "decode/sampling.hpp"
#include "sim/trace_sim.hpp"

using namespace rshallu;
using namespace rshallu::sim;

namespace {

FlipScenario fixed_flip_scenario() {
    FlipScenario s;
    s.name = "fixed-flip";
    s.n_layers = 32;
    s.vocab_size = 8;
    s.correct_token = 2;
    s.hallucinated_token = 5;
    s.strong_layers = {29, 30, 31};
    s.flip_margin = 1.0;
    s.seed = 17;
    return s;
}

decode::CorrectionConfig fixed_flip_config() {
    decode::CorrectionConfig c;
    c.thred_t = 0.2;
    c.r = 0.7;
    c.m_origin = {29, 30, 31};
    return c;
}

} // namespace

TEST_CASE("flip trace has the constructed shape") {
    const auto s = fixed_flip_scenario();
    const auto t = build_flip_trace(s, 0);
    CHECK(t.records.size() == 33);
    CHECK(decode::argmax(t.layer(30).logits) == s.correct_token);
    CHECK(decode::argmax(t.final_layer().logits) == s.hallucinated_token);
    const auto& fin = t.final_layer();
    CHECK(fin.logits[s.hallucinated_token] - fin.logits[s.correct_token] == doctest::Approx(s.flip_margin));
    for (int l : s.strong_layers) {
        const auto& r = t.layer(l);
        CHECK(r.a_v / r.a_t > fin.a_v / fin.a_t);
    }
    CHECK(build_flip_trace(s, 0).layer(12).logits == t.layer(12).logits);
    CHECK(build_flip_trace(s, 1).layer(12).logits != t.layer(12).logits);
}

TEST_CASE("scenario validation") {
    auto s = fixed_flip_scenario();
    s.flip_margin = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = fixed_flip_scenario();
    s.strong_layers.insert(32);
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = fixed_flip_scenario();
    s.hallucinated_token = s.correct_token;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("final layer with the highest balance makes correction a no-op") {
    auto s = fixed_flip_scenario();
    s.attention_profile[s.last_layer()] = {0.8, 0.1};
    const auto t = build_flip_trace(s, 0);
    const auto sel = decode::select_reference_layers(t, fixed_flip_config());
    CHECK(sel.stage1_layers.empty());
    CHECK(decode::correct_step(t, fixed_flip_config()).corrected_logits == t.final_layer().logits);
}

TEST_CASE("fixed config repairs the flip") {
    const auto t = run_generation(fixed_flip_scenario(), fixed_flip_config(), RunOptions{});
    CHECK(t.baseline_tokens.front() == 5);
    CHECK(t.corrected_tokens.front() == 2);
    CHECK(repair_eligible(fixed_flip_scenario(), fixed_flip_config()));
}

TEST_CASE("r = 0 leaves every stream unchanged") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto cfg = fixed_flip_config();
        cfg.r = 0.0;
        RunOptions o;
        o.n_steps = 5;
        o.mode = decode::DecodeMode::Sample;
        o.seed = seed;
        const auto t = run_generation(random_flip_scenario(seed, cfg.m_origin), cfg, o);
        CHECK(t.corrected_tokens == t.baseline_tokens);
    }
}

TEST_CASE("same seed gives the same transcript") {
    RunOptions o;
    o.n_steps = 4;
    o.mode = decode::DecodeMode::Sample;
    o.seed = 99;
    o.strategy = Strategy::Average;
    const auto s = random_flip_scenario(5, {24, 25, 26, 27, 28, 29, 30, 31});
    auto cfg = fixed_flip_config();
    cfg.m_origin = {24, 25, 26, 27, 28, 29, 30, 31};
    const auto a = run_generation(s, cfg, o);
    const auto b = run_generation(s, cfg, o);
    CHECK(a.corrected_tokens == b.corrected_tokens);
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        CHECK(transcript_step_json(a.steps[i]) == transcript_step_json(b.steps[i]));
    }
}

TEST_CASE("sweep rows and CSV") {
    const auto rows = sweep_recall(fixed_flip_scenario(), fixed_flip_config(), {0.0, 0.7}, Strategy::Selection, 0);
    REQUIRE(rows.size() == 2);
    CHECK_FALSE(rows[0].repaired);
    CHECK(rows[0].corrected_token == rows[0].baseline_token);
    CHECK(rows[1].repaired);
    CHECK(sweep_csv_header() == "r_p,K_m,K_t,thred_t,r,repaired,baseline_token,corrected_token,scenario\n");
    CHECK(sweep_csv_row(rows[1]) == "0.1,2,2,0.2,0.7,true,5,2,fixed-flip\n");
}

TEST_CASE("scenario JSON round trip") {
    const auto s = random_flip_scenario(3, {29, 30, 31});
    const auto back = scenario_from_json(scenario_to_json(s));
    CHECK(scenario_to_json(back) == scenario_to_json(s));
    CHECK_THROWS_AS(scenario_from_json(nlohmann::json{{"vocab_size", 4}}, 3), FormatError);
}
