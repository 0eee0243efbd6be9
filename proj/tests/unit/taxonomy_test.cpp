#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "common/error.hpp"
#include "common/jsonl.hpp"
#include "support/fixtures.hpp"
#include "taxonomy/taxonomy.hpp"

using namespace rshallu;
using namespace rshallu::taxonomy;

namespace {

// Images seen under more than one assigned split, by direct pair scan.
std::set<std::string> brute_force_leaks(const std::vector<QaItem>& items) {
    std::set<std::string> out;
    for (const auto& a : items) {
        for (const auto& b : items) {
            if (a.image_id == b.image_id && a.split != b.split && a.split != Split::Unassigned &&
                b.split != Split::Unassigned) {
                out.insert(a.image_id);
            }
        }
    }
    return out;
}

} // namespace

TEST_CASE("category names and codes") {
    for (Category c : kAllCategories) {
        CHECK(parse_category(to_string(c)) == c);
        CHECK(parse_category(short_code(c)) == c);
    }
    CHECK_FALSE(parse_category("weather").has_value());
}

TEST_CASE("scores are restricted to 0, 0.5 and 1") {
    CHECK(Score::parse("0.5") == Score::half());
    CHECK(Score::parse("1") == Score::one());
    CHECK_FALSE(Score::parse("0.7").has_value());
    CHECK(Score::from_value(0.0) == Score::zero());
    CHECK_FALSE(Score::from_value(0.25).has_value());
    CHECK(Score::half().str() == "0.5");
    CHECK_FALSE(Score::half().is_binary());
}

TEST_CASE("check-set count fixture validates clean") {
    const auto m = fixtures::check_set_manifest();
    const auto counts = count_by_split(m.items);
    std::size_t train = 0, val = 0;
    for (const auto& [c, n] : counts.at(Split::Train)) train += n;
    for (const auto& [c, n] : counts.at(Split::Val)) val += n;
    CHECK(train == 13994);
    CHECK(val == 1402);
    CHECK(validate_manifest(m).empty());

    DatasetManifest empty;
    CHECK(validate_manifest(empty).empty());
}

TEST_CASE("count mismatch is reported") {
    auto m = fixtures::check_set_manifest();
    m.items.pop_back();
    const auto v = validate_manifest(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rule == "count-mismatch");
    CHECK(v[0].item_id == "-");
}

TEST_CASE("one cross-split image is one leakage violation") {
    auto m = fixtures::check_set_manifest();
    // move one val item onto a train image
    auto it = std::find_if(m.items.begin(), m.items.end(), [](const QaItem& q) { return q.split == Split::Val; });
    it->image_id = "tr000007";
    const auto v = validate_manifest(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rule == "split-leakage");
    CHECK(v[0].detail.find("tr000007") != std::string::npos);
    CHECK(v[0].item_id == "q000007");
    const auto brute = brute_force_leaks(m.items);
    CHECK(brute == std::set<std::string>{"tr000007"});
    CHECK(leaked_image_ids(m.items) == std::vector<std::string>{"tr000007"});
}

TEST_CASE("leakage agrees with a brute-force scan on random pools") {
    for (unsigned seed = 0; seed < 20; ++seed) {
        std::vector<QaItem> items;
        unsigned x = seed * 2654435761u + 1;
        for (int i = 0; i < 60; ++i) {
            x = x * 1103515245u + 12345u;
            QaItem q;
            q.id = "i" + std::to_string(i);
            q.image_id = "img" + std::to_string((x >> 8) % 15);
            q.split = static_cast<Split>((x >> 20) % 4);
            q.answer = "a";
            items.push_back(q);
        }
        const auto got = leaked_image_ids(items);
        const auto want = brute_force_leaks(items);
        CHECK(std::set<std::string>(got.begin(), got.end()) == want);
    }
}

TEST_CASE("duplicate ids and empty answers") {
    DatasetManifest m;
    QaItem a;
    a.id = "x";
    a.image_id = "i";
    a.answer = "ok";
    m.items = {a, a};
    m.items[1].answer = "";
    const auto v = validate_manifest(m);
    REQUIRE(v.size() == 2);
    CHECK(v[0].rule == "duplicate-id");
    CHECK(v[1].rule == "empty-answer");
}

TEST_CASE("manifest serialization is canonical") {
    auto m = fixtures::check_set_manifest();
    m.items.resize(20);
    m.expected_counts.reset();
    auto shuffled = m;
    std::reverse(shuffled.items.begin(), shuffled.items.end());
    const auto text = serialize_manifest(m);
    CHECK(serialize_manifest(shuffled) == text);
    std::istringstream in(text);
    const auto back = read_manifest(in);
    CHECK(back.name == m.name);
    CHECK(back.items == m.items);
    CHECK(serialize_manifest(back) == text);
}

TEST_CASE("judgment files") {
    std::istringstream good(
        R"({"item_id":"a","model_name":"m","answer":"x","score":"0.5","source":"expert"})"
        "\n\n"
        R"({"item_id":"b","model_name":"m","answer":"y","score":"1.0","source":"automated"})"
        "\n");
    const auto js = read_judgments(good);
    REQUIRE(js.size() == 2);
    CHECK(js[0].score == Score::half());
    CHECK(js[0].source == JudgmentSource::Expert);

    std::istringstream auto_half(R"({"item_id":"a","model_name":"m","answer":"x","score":"0.5","source":"automated"})");
    CHECK_THROWS_AS(read_judgments(auto_half), FormatError);

    std::istringstream broken("{\"item_id\":\"a\"}\n{oops\n");
    try {
        read_judgments(broken);
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(e.line() == 2);
    }
}
