#include "taxonomy/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "common/error.hpp"
#include "common/jsonl.hpp"

namespace rshallu::taxonomy {

using nlohmann::json;

std::string_view to_string(Category c) {
    switch (c) {
        case Category::ImageAttribute: return "ImageAttribute";
        case Category::ImageScene: return "ImageScene";
        case Category::ObjectExistence: return "ObjectExistence";
        case Category::ObjectAttribute: return "ObjectAttribute";
        case Category::ObjectRelation: return "ObjectRelation";
    }
    return "?";
}

std::string_view short_code(Category c) {
    switch (c) {
        case Category::ImageAttribute: return "IA";
        case Category::ImageScene: return "IS";
        case Category::ObjectExistence: return "OE";
        case Category::ObjectAttribute: return "OA";
        case Category::ObjectRelation: return "OR";
    }
    return "?";
}

std::optional<Category> parse_category(std::string_view s) {
    for (Category c : kAllCategories) {
        if (s == to_string(c) || s == short_code(c)) return c;
    }
    return std::nullopt;
}

std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::Color: return "color";
        case Modality::Panchromatic: return "panchromatic";
        case Modality::Unknown: return "unknown";
    }
    return "?";
}

std::optional<Modality> parse_modality(std::string_view s) {
    for (Modality m : {Modality::Color, Modality::Panchromatic, Modality::Unknown}) {
        if (s == to_string(m)) return m;
    }
    return std::nullopt;
}

std::string_view to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Eval: return "eval";
        case Split::Unassigned: return "unassigned";
    }
    return "?";
}

std::optional<Split> parse_split(std::string_view s) {
    for (Split sp : {Split::Train, Split::Val, Split::Eval, Split::Unassigned}) {
        if (s == to_string(sp)) return sp;
    }
    return std::nullopt;
}

std::optional<Score> Score::parse(std::string_view s) {
    if (s == "0" || s == "0.0") return zero();
    if (s == "0.5") return half();
    if (s == "1" || s == "1.0") return one();
    return std::nullopt;
}

std::optional<Score> Score::from_value(double v) {
    if (v == 0.0) return zero();
    if (v == 0.5) return half();
    if (v == 1.0) return one();
    return std::nullopt;
}

std::string Score::str() const {
    switch (halves_) {
        case 0: return "0.0";
        case 1: return "0.5";
        default: return "1.0";
    }
}

std::string_view to_string(JudgmentSource s) {
    return s == JudgmentSource::Expert ? "expert" : "automated";
}

// --- validation -------------------------------------------------------------

std::map<Split, std::map<Category, std::size_t>> count_by_split(const std::vector<QaItem>& items) {
    std::map<Split, std::map<Category, std::size_t>> counts;
    for (const auto& item : items) ++counts[item.split][item.category];
    return counts;
}

std::vector<std::string> leaked_image_ids(const std::vector<QaItem>& items) {
    std::unordered_map<std::string, std::set<Split>> splits;
    for (const auto& item : items) {
        if (item.split == Split::Unassigned) continue;
        splits[item.image_id].insert(item.split);
    }
    std::vector<std::string> leaked;
    for (const auto& [image, s] : splits) {
        if (s.size() > 1) leaked.push_back(image);
    }
    std::sort(leaked.begin(), leaked.end());
    return leaked;
}

std::vector<Violation> validate_manifest(const DatasetManifest& manifest) {
    std::vector<Violation> out;

    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& item : manifest.items) {
        if (++seen[item.id] == 2) out.push_back({item.id, "duplicate-id", "id appears more than once"});
        if (item.answer.empty()) out.push_back({item.id, "empty-answer", "answer must be non-empty"});
    }

    if (manifest.expected_counts) {
        const auto actual = count_by_split(manifest.items);
        std::set<Split> splits;
        for (const auto& [s, _] : *manifest.expected_counts) splits.insert(s);
        for (const auto& [s, _] : actual) splits.insert(s);
        for (Split s : splits) {
            for (Category c : kAllCategories) {
                std::size_t want = 0;
                std::size_t have = 0;
                if (auto e = manifest.expected_counts->find(s); e != manifest.expected_counts->end()) {
                    if (auto it = e->second.find(c); it != e->second.end()) want = it->second;
                }
                if (auto a = actual.find(s); a != actual.end()) {
                    if (auto it = a->second.find(c); it != a->second.end()) have = it->second;
                }
                if (want != have) {
                    std::ostringstream d;
                    d << to_string(s) << '/' << to_string(c) << ": expected " << want << ", found " << have;
                    out.push_back({"-", "count-mismatch", d.str()});
                }
            }
        }
    }

    for (const auto& image : leaked_image_ids(manifest.items)) {
        std::set<std::string_view> names;
        std::string first_item;
        for (const auto& item : manifest.items) {
            if (item.image_id != image || item.split == Split::Unassigned) continue;
            names.insert(to_string(item.split));
            if (first_item.empty() || item.id < first_item) first_item = item.id;
        }
        std::string detail = "image_id " + image + " appears in splits";
        for (auto n : names) detail += " " + std::string(n);
        out.push_back({first_item, "split-leakage", detail});
    }
    return out;
}

// --- serialization ------------------------------------------------------------

json to_json(const QaItem& item) {
    json j = {
        {"id", item.id},
        {"image_id", item.image_id},
        {"category", to_string(item.category)},
        {"question", item.question},
        {"answer", item.answer},
        {"is_misleading", item.is_misleading},
        {"modality", to_string(item.modality)},
        {"split", to_string(item.split)},
    };
    if (item.is_hallucinated_answer) j["is_hallucinated_answer"] = *item.is_hallucinated_answer;
    return j;
}

json to_json(const Judgment& jd) {
    return {
        {"item_id", jd.item_id},
        {"model_name", jd.model_name},
        {"answer", jd.answer},
        {"score", jd.score.str()},
        {"source", to_string(jd.source)},
    };
}

namespace {

template <class T>
T parse_enum(const jsonl::Line& line, const char* key, std::optional<T> (*fn)(std::string_view), T fallback) {
    auto it = line.value.find(key);
    if (it == line.value.end()) return fallback;
    if (!it->is_string()) throw FormatError(line.number, std::string("field '") + key + "' must be a string");
    auto v = fn(it->get<std::string>());
    if (!v) throw FormatError(line.number, std::string("unknown ") + key + " '" + it->get<std::string>() + "'");
    return *v;
}

bool parse_bool(const jsonl::Line& line, const char* key, bool fallback) {
    auto it = line.value.find(key);
    if (it == line.value.end()) return fallback;
    if (!it->is_boolean()) throw FormatError(line.number, std::string("field '") + key + "' must be a boolean");
    return it->get<bool>();
}

QaItem parse_item(const jsonl::Line& line) {
    QaItem item;
    item.id = jsonl::require_string(line, "id");
    item.image_id = jsonl::require_string(line, "image_id");
    auto cat = parse_category(jsonl::require_string(line, "category"));
    if (!cat) throw FormatError(line.number, "unknown category '" + line.value["category"].get<std::string>() + "'");
    item.category = *cat;
    item.question = jsonl::require_string(line, "question");
    item.answer = jsonl::require_string(line, "answer");
    item.is_misleading = parse_bool(line, "is_misleading", false);
    if (line.value.contains("is_hallucinated_answer")) {
        item.is_hallucinated_answer = parse_bool(line, "is_hallucinated_answer", false);
    }
    item.modality = parse_enum(line, "modality", &parse_modality, Modality::Unknown);
    item.split = parse_enum(line, "split", &parse_split, Split::Unassigned);
    return item;
}

ExpectedCounts parse_expected(const jsonl::Line& line, const json& j) {
    if (!j.is_object()) throw FormatError(line.number, "expected_counts must be an object");
    ExpectedCounts counts;
    for (const auto& [split_name, per_cat] : j.items()) {
        auto split = parse_split(split_name);
        if (!split) throw FormatError(line.number, "unknown split '" + split_name + "' in expected_counts");
        if (!per_cat.is_object()) throw FormatError(line.number, "expected_counts." + split_name + " must be an object");
        for (const auto& [cat_name, n] : per_cat.items()) {
            auto cat = parse_category(cat_name);
            if (!cat) throw FormatError(line.number, "unknown category '" + cat_name + "' in expected_counts");
            if (!n.is_number_unsigned()) throw FormatError(line.number, "count for " + cat_name + " must be a non-negative integer");
            counts[*split][*cat] = n.get<std::size_t>();
        }
    }
    return counts;
}

json expected_to_json(const ExpectedCounts& counts) {
    json j = json::object();
    for (const auto& [split, per_cat] : counts) {
        json inner = json::object();
        for (const auto& [cat, n] : per_cat) inner[std::string(to_string(cat))] = n;
        j[std::string(to_string(split))] = inner;
    }
    return j;
}

std::vector<QaItem> sorted_by_id(std::vector<QaItem> items) {
    std::stable_sort(items.begin(), items.end(), [](const QaItem& a, const QaItem& b) { return a.id < b.id; });
    return items;
}

} // namespace

DatasetManifest read_manifest(std::istream& in) {
    auto lines = jsonl::read(in);
    DatasetManifest m;
    std::size_t first = 0;
    if (!lines.empty() && lines.front().value.contains("manifest")) {
        const auto& header = lines.front();
        m.name = jsonl::require_string(header, "manifest");
        if (auto it = header.value.find("expected_counts"); it != header.value.end() && !it->is_null()) {
            m.expected_counts = parse_expected(header, *it);
        }
        first = 1;
    }
    for (std::size_t i = first; i < lines.size(); ++i) m.items.push_back(parse_item(lines[i]));
    return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    return read_manifest(in);
}

std::string serialize_manifest(const DatasetManifest& manifest) {
    std::ostringstream out;
    json header = {{"manifest", manifest.name}};
    if (manifest.expected_counts) header["expected_counts"] = expected_to_json(*manifest.expected_counts);
    out << jsonl::dump(header) << '\n';
    for (const auto& item : sorted_by_id(manifest.items)) out << jsonl::dump(to_json(item)) << '\n';
    return out.str();
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    jsonl::write_text(path, serialize_manifest(manifest));
}

std::vector<QaItem> load_items(const std::filesystem::path& path) {
    std::vector<QaItem> items;
    for (const auto& line : jsonl::read_file(path)) items.push_back(parse_item(line));
    return items;
}

void save_items(const std::vector<QaItem>& items, const std::filesystem::path& path) {
    std::vector<json> records;
    for (const auto& item : sorted_by_id(items)) records.push_back(to_json(item));
    jsonl::write_file(path, records);
}

std::vector<Judgment> read_judgments(std::istream& in) {
    std::vector<Judgment> out;
    for (const auto& line : jsonl::read(in)) {
        Judgment j;
        j.item_id = jsonl::require_string(line, "item_id");
        j.model_name = jsonl::require_string(line, "model_name");
        j.answer = line.value.value("answer", "");
        const json& s = jsonl::require(line, "score");
        std::optional<Score> score;
        if (s.is_string()) score = Score::parse(s.get<std::string>());
        else if (s.is_number()) score = Score::from_value(s.get<double>());
        if (!score) throw FormatError(line.number, "score must be one of 0, 0.5, 1");
        j.score = *score;
        const std::string source = line.value.value("source", "automated");
        if (source == "expert") j.source = JudgmentSource::Expert;
        else if (source == "automated") j.source = JudgmentSource::Automated;
        else throw FormatError(line.number, "unknown source '" + source + "'");
        if (j.source == JudgmentSource::Automated && !j.score.is_binary()) {
            throw FormatError(line.number, "automated judgments must score 0 or 1");
        }
        out.push_back(std::move(j));
    }
    return out;
}

std::vector<Judgment> load_judgments(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open judgments " + path.string());
    return read_judgments(in);
}

std::string serialize_judgments(std::vector<Judgment> judgments) {
    std::stable_sort(judgments.begin(), judgments.end(), [](const Judgment& a, const Judgment& b) {
        return std::tie(a.model_name, a.item_id) < std::tie(b.model_name, b.item_id);
    });
    std::ostringstream out;
    for (const auto& j : judgments) out << jsonl::dump(to_json(j)) << '\n';
    return out.str();
}

void save_judgments(const std::vector<Judgment>& judgments, const std::filesystem::path& path) {
    jsonl::write_text(path, serialize_judgments(judgments));
}

} // namespace rshallu::taxonomy
