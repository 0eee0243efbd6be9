#include "metrics/metrics.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "common/text.hpp"

namespace rshallu::metrics {

namespace {

std::unordered_map<std::string, Category> category_index(const DatasetManifest& manifest) {
    std::unordered_map<std::string, Category> idx;
    for (const auto& item : manifest.items) idx.emplace(item.id, item.category);
    return idx;
}

std::optional<double> relative_error(std::optional<double> a, std::optional<double> e) {
    if (!a || !e || *e == 0.0) return std::nullopt;
    return std::fabs(*a - *e) / *e;
}

std::string cell(const std::optional<double>& v) { return v ? text::fixed(*v, 4) : "undefined"; }

} // namespace

HfReport hf(std::span<const Judgment> judgments, const DatasetManifest& manifest) {
    if (judgments.empty()) throw DataError("no judgments to aggregate");
    const auto idx = category_index(manifest);

    std::map<Category, double> sums;
    std::unordered_set<std::string> seen;
    double total = 0.0;
    HfReport r;
    for (const auto& j : judgments) {
        auto it = idx.find(j.item_id);
        if (it == idx.end()) throw JoinError("judgment references unknown item '" + j.item_id + "'");
        if (!seen.insert(j.item_id).second) throw DataError("item '" + j.item_id + "' judged more than once");
        sums[it->second] += j.score.value();
        ++r.counts[it->second];
        total += j.score.value();
    }
    for (Category c : taxonomy::kAllCategories) {
        auto n = r.counts.find(c);
        if (n == r.counts.end()) {
            r.omitted.push_back(c);
            continue;
        }
        r.per_category[c] = sums[c] / static_cast<double>(n->second);
    }
    r.n_items = judgments.size();
    r.overall = total / static_cast<double>(r.n_items);
    return r;
}

EsReport es(const HfReport& hf_auto, const HfReport& hf_expert) {
    EsReport out;
    std::set<Category> cats;
    for (const auto& [c, _] : hf_auto.per_category) cats.insert(c);
    for (const auto& [c, _] : hf_expert.per_category) cats.insert(c);
    for (Category c : cats) {
        std::optional<double> a, e;
        if (auto it = hf_auto.per_category.find(c); it != hf_auto.per_category.end()) a = it->second;
        if (auto it = hf_expert.per_category.find(c); it != hf_expert.per_category.end()) e = it->second;
        out.per_category[c] = relative_error(a, e);
    }
    out.overall = relative_error(hf_auto.overall, hf_expert.overall);
    return out;
}

EsReport mes(std::span<const EsReport> reports) {
    if (reports.empty()) throw DataError("MES needs at least one ES report");
    EsReport out;
    std::map<Category, std::pair<double, std::size_t>> acc;
    std::set<Category> cats;
    double overall_sum = 0.0;
    std::size_t overall_n = 0;
    for (const auto& r : reports) {
        for (const auto& [c, v] : r.per_category) {
            cats.insert(c);
            if (v) {
                acc[c].first += *v;
                ++acc[c].second;
            }
        }
        if (r.overall) {
            overall_sum += *r.overall;
            ++overall_n;
        }
    }
    for (Category c : cats) {
        auto it = acc.find(c);
        out.per_category[c] = it == acc.end() ? std::nullopt
                                              : std::optional<double>(it->second.first / static_cast<double>(it->second.second));
    }
    if (overall_n > 0) out.overall = overall_sum / static_cast<double>(overall_n);
    return out;
}

AccuracyReport checker_accuracy(std::span<const Judgment> verdicts, std::span<const Judgment> labels,
                                const DatasetManifest& manifest) {
    if (verdicts.empty()) throw DataError("no verdicts to score");
    const auto idx = category_index(manifest);
    std::unordered_map<std::string, const Judgment*> by_item;
    for (const auto& l : labels) {
        if (!l.score.is_binary()) throw BinaryPreconditionError("label for '" + l.item_id + "' scores " + l.score.str());
        if (!by_item.emplace(l.item_id, &l).second) throw DataError("duplicate label for '" + l.item_id + "'");
    }

    AccuracyReport r;
    std::map<Category, std::size_t> hits;
    std::size_t total_hits = 0;
    for (const auto& v : verdicts) {
        if (!v.score.is_binary()) throw BinaryPreconditionError("verdict for '" + v.item_id + "' scores " + v.score.str());
        auto label = by_item.find(v.item_id);
        if (label == by_item.end()) throw JoinError("no label for item '" + v.item_id + "'");
        auto cat = idx.find(v.item_id);
        if (cat == idx.end()) throw JoinError("verdict references unknown item '" + v.item_id + "'");
        ++r.counts[cat->second];
        if (label->second->score == v.score) {
            ++hits[cat->second];
            ++total_hits;
        }
    }
    for (const auto& [c, n] : r.counts) r.per_category[c] = static_cast<double>(hits[c]) / static_cast<double>(n);
    r.n_items = verdicts.size();
    r.overall = static_cast<double>(total_hits) / static_cast<double>(r.n_items);
    return r;
}

std::string hf_csv(std::span<const NamedHf> reports) {
    std::ostringstream out;
    out << "model,category,count,hf\n";
    for (const auto& [model, r] : reports) {
        for (const auto& [c, v] : r.per_category) {
            out << model << ',' << taxonomy::short_code(c) << ',' << r.counts.at(c) << ',' << text::fixed(v, 4) << '\n';
        }
        out << model << ",all," << r.n_items << ',' << text::fixed(r.overall, 4) << '\n';
    }
    return out.str();
}

std::string radar_csv(std::span<const NamedHf> reports) {
    std::ostringstream out;
    out << "model,category,rate\n";
    for (const auto& [model, r] : reports) {
        for (const auto& [c, v] : r.per_category) out << model << ',' << taxonomy::short_code(c) << ',' << text::fixed(v, 4) << '\n';
    }
    return out.str();
}

std::string es_csv(std::span<const NamedEs> rows, const EsReport& mes_row) {
    std::ostringstream out;
    out << "checker,model";
    for (Category c : taxonomy::kAllCategories) out << ",ES_" << taxonomy::short_code(c);
    out << ",ES_all\n";
    auto emit = [&](const std::string& checker, const std::string& model, const EsReport& r) {
        out << checker << ',' << model;
        for (Category c : taxonomy::kAllCategories) {
            auto it = r.per_category.find(c);
            out << ',' << (it == r.per_category.end() ? "undefined" : cell(it->second));
        }
        out << ',' << cell(r.overall) << '\n';
    };
    for (const auto& row : rows) emit(row.checker, row.model, row.report);
    emit("MES", "*", mes_row);
    return out.str();
}

std::string accuracy_csv(const AccuracyReport& r) {
    std::ostringstream out;
    out << "category,count,accuracy\n";
    for (const auto& [c, v] : r.per_category) out << taxonomy::short_code(c) << ',' << r.counts.at(c) << ',' << text::fixed(v, 4) << '\n';
    out << "all," << r.n_items << ',' << text::fixed(r.overall, 4) << '\n';
    return out.str();
}

} // namespace rshallu::metrics
