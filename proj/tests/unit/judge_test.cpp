#include <doctest.h>

#include "checker/client.hpp"
#include "checker/judge.hpp"
#include "common/jsonl.hpp"
#include "metrics/metrics.hpp"

using namespace rshallu;
using namespace rshallu::checker;

namespace {

taxonomy::QaItem item(const std::string& id) {
    taxonomy::QaItem q;
    q.id = id;
    q.image_id = "img-" + id;
    q.category = taxonomy::Category::ObjectExistence;
    q.question = "Is there an airplane on the apron?";
    q.answer = "Yes, two airplanes.";
    return q;
}

ClientResponse ok(const std::string& text) { return {text, 0.0, TransportStatus::Ok, ""}; }

} // namespace

TEST_CASE("judge prompt contents") {
    JudgeOptions o;
    const auto p = build_judge_prompt(item("a"), "Yes.", std::string("Yes, two airplanes."), o);
    CHECK(p.find(kCotSentence) != std::string::npos);
    CHECK(p.find("Ground truth answer: Yes, two airplanes.") != std::string::npos);

    o.use_cot = false;
    CHECK(build_judge_prompt(item("a"), "Yes.", std::string("x"), o).find(kCotSentence) == std::string::npos);

    const auto local = JudgeOptions::local_checker();
    const auto lp = build_judge_prompt(item("a"), "Yes.", std::string("leak"), local);
    CHECK(lp.find("Ground truth") == std::string::npos);
    CHECK(lp.find("leak") == std::string::npos);

    CHECK_THROWS_AS(build_judge_prompt(item("a"), "Yes.", std::nullopt, JudgeOptions{}), ConfigError);
    CHECK_THROWS_AS(build_judge_prompt(item("a"), "  ", std::string("x"), JudgeOptions{}), UsageError);
}

TEST_CASE("marking strategies differ only in the marking line") {
    JudgeOptions acc, pres;
    pres.marking = Marking::Presence;
    const auto a = build_judge_prompt(item("a"), "Yes.", std::string("Yes"), acc);
    const auto b = build_judge_prompt(item("a"), "Yes.", std::string("Yes"), pres);
    auto lines = [](const std::string& s) {
        std::vector<std::string> out;
        std::istringstream in(s);
        for (std::string l; std::getline(in, l);) out.push_back(l);
        return out;
    };
    const auto la = lines(a), lb = lines(b);
    REQUIRE(la.size() == lb.size());
    int differing = 0;
    for (std::size_t i = 0; i < la.size(); ++i) {
        if (la[i] != lb[i]) {
            ++differing;
            CHECK(la[i].rfind("Marking:", 0) == 0);
        }
    }
    CHECK(differing == 1);
}

TEST_CASE("verdict parsing basics") {
    JudgeOptions acc, pres;
    pres.marking = Marking::Presence;
    auto v = parse_verdict("...therefore the answer is wrong. Mark: 0", acc);
    CHECK(v.binary == VerdictLabel::Hallucinated);
    CHECK(v.reasoning_present);
    v = parse_verdict("1", pres);
    CHECK(v.binary == VerdictLabel::Hallucinated);
    CHECK_FALSE(v.reasoning_present);
    CHECK_THROWS_AS(parse_verdict("maybe", acc), UnparseableVerdictError);
    CHECK_THROWS_AS(parse_verdict("", acc), UnparseableVerdictError);
    CHECK(to_score(VerdictLabel::Clean) == taxonomy::Score::one());
    CHECK(from_score(taxonomy::Score::zero()) == VerdictLabel::Hallucinated);
}

TEST_CASE("verdict corpus") {
    std::size_t unparseable = 0;
    for (const auto& line : jsonl::read_file(RSHALLU_TEST_DATA "/verdict_corpus.jsonl")) {
        JudgeOptions o;
        o.marking = *parse_marking(line.value.at("marking").get<std::string>());
        const auto expect = line.value.at("expect").get<std::string>();
        const auto response = line.value.at("response").get<std::string>();
        CAPTURE(line.value.at("id").get<std::string>());
        if (expect == "unparseable") {
            ++unparseable;
            CHECK_THROWS_AS(parse_verdict(response, o), UnparseableVerdictError);
        } else {
            CHECK(parse_verdict(response, o).binary ==
                  (expect == "clean" ? VerdictLabel::Clean : VerdictLabel::Hallucinated));
        }
    }
    CHECK(unparseable == 3);
}

TEST_CASE("batch judging over a replay transport") {
    std::vector<BatchEntry> entries;
    ReplayTransport replay;
    const char* replies[] = {"Mark: 1", "Mark: 0", "Reasoning first. Mark: 1", "Mark: 1"};
    taxonomy::DatasetManifest m;
    for (int i = 0; i < 4; ++i) {
        const auto q = item("q" + std::to_string(i));
        m.items.push_back(q);
        entries.push_back({q, "llava", "some answer"});
        replay.add(judge_request_id("llava", q.id), ok(replies[i]));
    }
    BatchPolicy policy;
    policy.backoff_base = std::chrono::milliseconds(0);
    const auto r = judge_batch(entries, replay, JudgeOptions{}, policy, "judge");
    REQUIRE(r.judgments.size() == 4);
    CHECK(r.unjudged.empty());
    CHECK(metrics::hf(r.judgments, m).overall == 0.75);
    CHECK(replay.calls() == 4);
    CHECK(replay.requests().front().model_name == "judge");
}

TEST_CASE("unparseable and failing items are isolated") {
    std::vector<BatchEntry> entries;
    ReplayTransport replay;
    for (int i = 0; i < 3; ++i) {
        const auto q = item("q" + std::to_string(i));
        entries.push_back({q, "m", "ans"});
    }
    replay.add(judge_request_id("m", "q0"), ok("Mark: 1"));
    replay.add(judge_request_id("m", "q1"), ok("no idea"));
    replay.add(judge_request_id("m", "q2"), {"", 0.0, TransportStatus::Error, "timeout"});
    replay.add(judge_request_id("m", "q2"), ok("Mark: 0"));
    BatchPolicy policy;
    policy.max_retries = 2;
    policy.backoff_base = std::chrono::milliseconds(0);
    const auto r = judge_batch(entries, replay, JudgeOptions{}, policy, "judge");
    REQUIRE(r.judgments.size() == 2);
    CHECK(r.judgments[0].item_id == "q0");
    CHECK(r.judgments[1].item_id == "q2");
    REQUIRE(r.unjudged.size() == 1);
    CHECK(r.unjudged[0].item_id == "q1");
    CHECK(r.unjudged[0].attempts == 3);
}

TEST_CASE("concurrency does not change the result") {
    std::vector<BatchEntry> entries;
    ReplayTransport replay;
    for (int i = 0; i < 40; ++i) {
        const auto q = item("q" + std::to_string(i));
        entries.push_back({q, i % 2 ? "a" : "b", "ans"});
        replay.add(judge_request_id(entries.back().model_name, q.id), ok(i % 3 ? "Mark: 1" : "Mark: 0"));
    }
    BatchPolicy one, four;
    one.concurrency_limit = 1;
    four.concurrency_limit = 4;
    const auto x = judge_batch(entries, replay, JudgeOptions{}, one, "judge");
    const auto y = judge_batch(entries, replay, JudgeOptions{}, four, "judge");
    CHECK(x.judgments == y.judgments);
}

TEST_CASE("replay transport serves responses in order") {
    ReplayTransport r;
    r.add("k", ok("first"));
    r.add("k", ok("second"));
    CHECK(r.complete({"k", "", "", ""}).text == "first");
    CHECK(r.complete({"k", "", "", ""}).text == "second");
    CHECK(r.complete({"k", "", "", ""}).text == "second");
    CHECK(r.complete({"missing", "", "", ""}).status == TransportStatus::Error);
    CHECK_THROWS_AS(make_client("ftp://x"), UsageError);
}
