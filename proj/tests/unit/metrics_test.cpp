#include <doctest.h>

#include <cmath>

#include "metrics/metrics.hpp"

using namespace rshallu;
using namespace rshallu::metrics;
using taxonomy::Category;
using taxonomy::Score;

namespace {

DatasetManifest manifest_of(const std::vector<std::pair<std::string, Category>>& items) {
    DatasetManifest m;
    for (const auto& [id, c] : items) {
        taxonomy::QaItem q;
        q.id = id;
        q.image_id = "img-" + id;
        q.category = c;
        q.question = "q";
        q.answer = "a";
        m.items.push_back(q);
    }
    return m;
}

Judgment judged(const std::string& id, Score s, const std::string& model = "m") {
    return {id, model, "ans", s, taxonomy::JudgmentSource::Automated};
}

HfReport report_with(std::map<Category, double> per, double overall) {
    HfReport r;
    r.per_category = std::move(per);
    r.overall = overall;
    return r;
}

} // namespace

TEST_CASE("HF per category is the category mean") {
    const auto m = manifest_of({{"a", Category::ObjectExistence}, {"b", Category::ObjectExistence},
                                {"c", Category::ObjectExistence}, {"d", Category::ObjectExistence}});
    const std::vector<Judgment> js = {judged("a", Score::one()), judged("b", Score::zero()), judged("c", Score::half()),
                                      judged("d", Score::one())};
    const auto r = hf(js, m);
    CHECK(r.per_category.at(Category::ObjectExistence) == (1.0 + 0.0 + 0.5 + 1.0) / 4.0);
    CHECK(r.per_category.at(Category::ObjectExistence) == 0.625);
    CHECK(r.omitted.size() == 4);
}

TEST_CASE("HF overall is the item mean") {
    const auto m = manifest_of({{"a", Category::ImageScene}, {"b", Category::ObjectRelation}, {"c", Category::ObjectRelation}});
    const std::vector<Judgment> two = {judged("a", Score::one()), judged("b", Score::zero())};
    auto r = hf(two, m);
    CHECK(r.per_category.at(Category::ImageScene) == 1.0);
    CHECK(r.per_category.at(Category::ObjectRelation) == 0.0);
    CHECK(r.overall == 0.5);

    // 1 + 0 + 1 over three items, not the mean of the category means
    const std::vector<Judgment> three = {judged("a", Score::one()), judged("b", Score::zero()), judged("c", Score::one())};
    r = hf(three, m);
    CHECK(r.overall == doctest::Approx(2.0 / 3.0));
    CHECK(r.per_category.at(Category::ObjectRelation) == 0.5);

    const std::vector<Judgment> all_one = {judged("a", Score::one()), judged("b", Score::one())};
    r = hf(all_one, m);
    for (const auto& [c, v] : r.per_category) CHECK(v == 1.0);
}

TEST_CASE("HF rejects bad input") {
    const auto m = manifest_of({{"a", Category::ImageScene}});
    CHECK_THROWS_AS(hf(std::vector<Judgment>{}, m), DataError);
    CHECK_THROWS_AS(hf(std::vector<Judgment>{judged("zz", Score::one())}, m), JoinError);
    CHECK_THROWS_AS(hf(std::vector<Judgment>{judged("a", Score::one()), judged("a", Score::one())}, m), DataError);
}

TEST_CASE("ES is the relative error against the expert") {
    const auto a = report_with({{Category::ObjectExistence, 0.5007}}, 0.5007);
    const auto e = report_with({{Category::ObjectExistence, 0.5317}}, 0.5317);
    const auto r = es(a, e);
    const double hand = std::abs(0.5007 - 0.5317) / 0.5317;
    REQUIRE(r.overall);
    CHECK(*r.overall == doctest::Approx(hand).epsilon(1e-12));
    CHECK(std::abs(*r.overall - 0.0583) <= 1e-4);

    const auto same = es(e, e);
    CHECK(*same.overall == 0.0);
    CHECK(*same.per_category.at(Category::ObjectExistence) == 0.0);
}

TEST_CASE("ES is undefined where the expert rate is zero or missing") {
    const auto a = report_with({{Category::ImageScene, 0.4}, {Category::ObjectRelation, 0.2}}, 0.3);
    const auto e = report_with({{Category::ImageScene, 0.0}, {Category::ObjectRelation, 0.4}, {Category::ObjectAttribute, 0.1}}, 0.2);
    const auto r = es(a, e);
    CHECK_FALSE(r.per_category.at(Category::ImageScene).has_value());
    CHECK(*r.per_category.at(Category::ObjectRelation) == doctest::Approx(0.5));
    CHECK_FALSE(r.per_category.at(Category::ObjectAttribute).has_value());
    CHECK(*r.overall == doctest::Approx(0.5));
}

TEST_CASE("MES averages defined entries") {
    EsReport x, y, z;
    x.overall = 0.1;
    y.overall = 0.3;
    x.per_category[Category::ImageScene] = 0.2;
    y.per_category[Category::ImageScene] = std::nullopt;
    z.per_category[Category::ImageScene] = 0.4;
    z.overall = std::nullopt;

    const std::vector<EsReport> one = {x};
    CHECK(*mes(one).overall == 0.1);
    const std::vector<EsReport> two = {x, y};
    CHECK(*mes(two).overall == doctest::Approx(0.2));
    const std::vector<EsReport> three = {x, y, z};
    const auto m = mes(three);
    CHECK(*m.per_category.at(Category::ImageScene) == doctest::Approx(0.3));
    CHECK(*m.overall == doctest::Approx(0.2));
    CHECK_THROWS_AS(mes(std::vector<EsReport>{}), DataError);
}

TEST_CASE("checker accuracy counts agreement") {
    const auto m = manifest_of({{"a", Category::ImageAttribute}, {"b", Category::ImageAttribute},
                                {"c", Category::ImageAttribute}, {"d", Category::ImageAttribute}});
    const std::vector<Judgment> labels = {judged("a", Score::one()), judged("b", Score::zero()), judged("c", Score::one()),
                                          judged("d", Score::zero())};
    const std::vector<Judgment> verdicts = {judged("a", Score::one()), judged("b", Score::zero()), judged("c", Score::one()),
                                            judged("d", Score::one())};
    auto r = checker_accuracy(verdicts, labels, m);
    CHECK(r.per_category.at(Category::ImageAttribute) == 0.75);
    CHECK(r.overall == 0.75);
    r = checker_accuracy(labels, labels, m);
    CHECK(r.overall == 1.0);

    auto bad = labels;
    bad[0].score = Score::half();
    CHECK_THROWS_AS(checker_accuracy(verdicts, bad, m), BinaryPreconditionError);
}

TEST_CASE("report CSVs") {
    const auto m = manifest_of({{"a", Category::ImageScene}, {"b", Category::ImageScene}, {"c", Category::ObjectRelation}});
    const std::vector<Judgment> js = {judged("a", Score::one()), judged("b", Score::half()), judged("c", Score::zero())};
    const std::vector<NamedHf> named = {{"m1", hf(js, m)}};
    CHECK(hf_csv(named) == "model,category,count,hf\nm1,IS,2,0.7500\nm1,OR,1,0.0000\nm1,all,3,0.5000\n");
    CHECK(radar_csv(named) == "model,category,rate\nm1,IS,0.7500\nm1,OR,0.0000\n");

    EsReport r;
    r.per_category[Category::ImageScene] = 0.25;
    r.per_category[Category::ObjectRelation] = std::nullopt;
    r.overall = 0.125;
    const std::vector<NamedEs> rows = {{"gpt", "m1", r}};
    CHECK(es_csv(rows, r) ==
          "checker,model,ES_IA,ES_IS,ES_OE,ES_OA,ES_OR,ES_all\n"
          "gpt,m1,undefined,0.2500,undefined,undefined,undefined,0.1250\n"
          "MES,*,undefined,0.2500,undefined,undefined,undefined,0.1250\n");
}
