#include "datagen/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_set>

#include "common/rng.hpp"
#include "common/text.hpp"

namespace rshallu::datagen {

std::string_view to_string(GenKind k) { return k == GenKind::Normal ? "normal" : "misleading"; }

std::optional<GenKind> parse_gen_kind(std::string_view s) {
    if (s == "normal") return GenKind::Normal;
    if (s == "misleading") return GenKind::Misleading;
    return std::nullopt;
}

std::optional<GenPurpose> parse_gen_purpose(std::string_view s) {
    if (s == "check") return GenPurpose::Check;
    if (s == "shield") return GenPurpose::Shield;
    return std::nullopt;
}

const std::vector<std::string>& common_rs_objects() {
    static const std::vector<std::string> objects = {
        "airplane", "airport runway", "baseball field", "basketball court", "bridge", "building",
        "dam", "farmland", "forest", "golf course", "ground track field", "harbor",
        "industrial area", "overpass", "parking lot", "railway station", "residential area", "river",
        "road", "roundabout", "ship", "stadium", "storage tank", "swimming pool",
        "tennis court", "vehicle", "viaduct", "wind turbine",
    };
    return objects;
}

namespace {

std::string_view topic(Category c) {
    switch (c) {
        case Category::ImageAttribute: return "image attributes such as the imaging modality and the resolution";
        case Category::ImageScene: return "the overall scene and land use of the image";
        case Category::ObjectExistence: return "whether particular objects exist in the image";
        case Category::ObjectAttribute: return "attributes of objects such as color, shape, number and position";
        case Category::ObjectRelation: return "relations between objects such as relative position and comparison";
    }
    return "";
}

constexpr std::string_view kPairFormat =
    "Write each pair on two lines, \"Q<k>: <question>\" followed by \"A<k>: <answer>\", numbering pairs from 1. "
    "Questions and answers must not mention the caption or any text description.";

} // namespace

GenRequest build_gen_request(Category category, std::string_view caption, const std::optional<std::string>& image_ref,
                             GenKind kind, GenPurpose purpose, std::size_t count) {
    if (text::trim(caption).empty()) throw UsageError("caption must be non-empty");
    if (count == 0) throw UsageError("count must be positive");

    GenRequest r;
    r.category = category;
    r.caption = std::string(caption);
    r.count = count;
    r.kind = kind;
    r.purpose = kind == GenKind::Misleading ? GenPurpose::Shield : purpose;

    const bool needs_image = category == Category::ObjectRelation;
    if (needs_image && !image_ref) throw RoutingError("object-relation requests need the image as well as the caption");
    if (needs_image || kind == GenKind::Misleading) r.image_ref = image_ref;

    std::ostringstream p;
    p << "You are given a fine-grained caption of a remote sensing image"
      << (r.image_ref ? " together with the image itself" : "") << ".\n";
    if (kind == GenKind::Normal) {
        p << "Using " << (r.image_ref ? "both the image and the caption" : "only the caption") << ", generate exactly "
          << count << " question-answer pairs about " << topic(category) << ".\n";
        if (r.purpose == GenPurpose::Check) {
            const std::size_t clean = count / 2;
            p << "The first " << clean << " pairs must have accurate answers without hallucinations. "
              << "The last " << count - clean << " pairs must have answers that contain hallucinations.\n";
        } else {
            p << "Every answer must be accurate and consistent with the image.\n";
        }
    } else {
        p << "Generate exactly " << count << " misleading question-answer pairs about " << topic(category)
          << ". Follow these rules:\n";
        p << "1. Each question carries a false premise: an attribute that does not hold (color, position, number or "
             "shape), an interaction that does not happen, or an object that is not present.\n";
        p << "2. Only ask about object types common in remote sensing imagery, chosen from this list: ";
        const auto& objs = common_rs_objects();
        for (std::size_t i = 0; i < objs.size(); ++i) p << (i ? ", " : "") << objs[i];
        p << ".\n";
        p << "3. Every object you mention must be plausible for this particular scene.\n";
        p << "4. Vary wording and sentence structure from question to question.\n";
        p << "5. Each answer must be correct: it must not accept the false premise and must state what is actually "
             "true.\n";
    }
    p << kPairFormat << "\n\nCaption: " << caption << "\n";
    r.instruction = p.str();
    return r;
}

GenBatch parse_gen_batch(std::string_view response, std::size_t expected_count, bool positional_labels) {
    static const std::regex q_line(R"(^\s*\**\s*(?:q|question)\s*(\d+)?\s*\**\s*[:.)]\s*\**\s*(.*)$)", std::regex::icase);
    static const std::regex a_line(R"(^\s*\**\s*(?:a|answer)\s*(\d+)?\s*\**\s*[:.)]\s*\**\s*(.*)$)", std::regex::icase);

    struct Draft {
        std::size_t position;
        std::string question;
        std::optional<std::string> answer;
    };
    std::vector<Draft> drafts;
    enum { None, InQ, InA } state = None;

    std::istringstream in{std::string(response)};
    std::string line;
    std::smatch m;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (std::regex_match(line, m, q_line)) {
            const std::size_t pos = m[1].matched ? std::stoul(m[1].str()) : drafts.size() + 1;
            drafts.push_back({pos, text::trim(m[2].str()), std::nullopt});
            state = InQ;
        } else if (std::regex_match(line, m, a_line) && !drafts.empty() && !drafts.back().answer) {
            drafts.back().answer = text::trim(m[2].str());
            state = InA;
        } else if (!text::trim(line).empty()) {
            if (state == InQ) drafts.back().question += " " + text::trim(line);
            else if (state == InA) *drafts.back().answer += " " + text::trim(line);
        } else {
            state = drafts.empty() || drafts.back().answer ? None : state;
        }
    }

    GenBatch batch;
    std::set<std::size_t> used;
    for (const auto& d : drafts) {
        if (batch.pairs.size() == expected_count) break;
        if (d.question.empty() || !d.answer || d.answer->empty()) continue;
        if (d.position < 1 || d.position > expected_count || !used.insert(d.position).second) continue;
        GenPair p{d.position, d.question, *d.answer, std::nullopt};
        if (positional_labels) p.is_hallucinated_answer = d.position > expected_count / 2;
        batch.pairs.push_back(std::move(p));
    }
    if (batch.pairs.size() < expected_count) throw PartialBatchError(expected_count, std::move(batch.pairs));
    return batch;
}

std::vector<QaItem> batch_items(const GenBatch& batch, const GenRequest& request, std::string_view image_id) {
    std::vector<QaItem> out;
    for (const auto& p : batch.pairs) {
        QaItem item;
        item.id = std::string(image_id) + "-" + std::string(taxonomy::short_code(request.category)) + "-" +
                  std::string(to_string(request.kind)) + "-" + std::to_string(p.position);
        item.image_id = std::string(image_id);
        item.category = request.category;
        item.question = p.question;
        item.answer = p.answer;
        item.is_misleading = request.kind == GenKind::Misleading;
        item.is_hallucinated_answer = p.is_hallucinated_answer;
        out.push_back(std::move(item));
    }
    return out;
}

std::string normalize_yesno(std::string_view answer) {
    const std::string a = text::trim(answer);
    for (std::string_view word : {std::string_view("yes"), std::string_view("no")}) {
        if (!text::istarts_with(a, word)) continue;
        if (a.size() > word.size()) {
            const unsigned char next = static_cast<unsigned char>(a[word.size()]);
            if (std::isalnum(next)) continue;
        }
        if (text::word_count(a) > kYesNoWordThreshold) return word == "yes" ? "Yes" : "No";
    }
    return std::string(answer);
}

const std::vector<std::string>& caption_phrases() {
    static const std::vector<std::string> phrases = {
        "caption", "the description", "as described", "the text says", "the text mentions", "mentioned in the text",
    };
    return phrases;
}

namespace {

constexpr std::size_t kVerbatimRun = 8;

std::string normalize_word(const std::string& w) {
    std::string out;
    for (char c : w) {
        if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::unordered_set<std::string> caption_runs(std::string_view caption) {
    std::vector<std::string> words;
    for (const auto& w : text::split_words(caption)) words.push_back(normalize_word(w));
    std::unordered_set<std::string> runs;
    for (std::size_t i = 0; i + kVerbatimRun <= words.size(); ++i) {
        std::string key;
        for (std::size_t k = 0; k < kVerbatimRun; ++k) key += words[i + k] + " ";
        runs.insert(key);
    }
    return runs;
}

bool copies_caption(std::string_view s, const std::unordered_set<std::string>& runs) {
    if (runs.empty()) return false;
    std::vector<std::string> words;
    for (const auto& w : text::split_words(s)) words.push_back(normalize_word(w));
    for (std::size_t i = 0; i + kVerbatimRun <= words.size(); ++i) {
        std::string key;
        for (std::size_t k = 0; k < kVerbatimRun; ++k) key += words[i + k] + " ";
        if (runs.count(key)) return true;
    }
    return false;
}

} // namespace

FilterResult filter_and_flag(std::span<const QaItem> items, const ShieldConfig& cfg, std::string_view caption) {
    const auto runs = caption_runs(caption);
    FilterResult out;
    for (const auto& item : items) {
        if (text::word_count(item.answer) > cfg.max_answer_len) {
            out.removed.push_back(item);
            continue;
        }
        bool mentions = copies_caption(item.question, runs) || copies_caption(item.answer, runs);
        for (const auto& phrase : caption_phrases()) {
            if (mentions) break;
            mentions = text::icontains(item.question, phrase) || text::icontains(item.answer, phrase);
        }
        (mentions ? out.flagged : out.kept).push_back(item);
    }
    return out;
}

std::vector<std::size_t> apportion(std::size_t total, std::span<const std::size_t> weights) {
    const std::uint64_t sum = std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
    if (weights.empty() || sum == 0) throw ConfigError("apportionment needs a positive weight");
    std::vector<std::size_t> out(weights.size());
    std::vector<std::uint64_t> rem(weights.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const std::uint64_t num = static_cast<std::uint64_t>(total) * weights[i];
        out[i] = static_cast<std::size_t>(num / sum);
        rem[i] = num % sum;
        assigned += out[i];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k]];
    return out;
}

namespace {

std::vector<QaItem> draw(std::span<const QaItem> pool, std::size_t n, const std::map<Category, std::size_t>& quotas,
                         Rng& rng, GenKind kind) {
    std::vector<QaItem> sorted(pool.begin(), pool.end());
    std::sort(sorted.begin(), sorted.end(), [](const QaItem& a, const QaItem& b) { return a.id < b.id; });

    std::vector<QaItem> out;
    auto take = [&](std::vector<QaItem> bucket, std::size_t count, const std::string& label) {
        if (bucket.size() < count) {
            throw ShortfallError(std::string(to_string(kind)) + label + " needs " + std::to_string(count) + ", pool has " +
                                 std::to_string(bucket.size()));
        }
        rng.shuffle(bucket);
        out.insert(out.end(), bucket.begin(), bucket.begin() + static_cast<std::ptrdiff_t>(count));
    };

    if (quotas.empty()) {
        take(std::move(sorted), n, "");
    } else {
        std::vector<Category> cats;
        std::vector<std::size_t> weights;
        for (const auto& [c, w] : quotas) {
            cats.push_back(c);
            weights.push_back(w);
        }
        const auto counts = apportion(n, weights);
        for (std::size_t i = 0; i < cats.size(); ++i) {
            std::vector<QaItem> bucket;
            for (const auto& item : sorted) {
                if (item.category == cats[i]) bucket.push_back(item);
            }
            take(std::move(bucket), counts[i], "/" + std::string(taxonomy::to_string(cats[i])));
        }
    }
    for (auto& item : out) item.is_misleading = kind == GenKind::Misleading;
    return out;
}

} // namespace

taxonomy::DatasetManifest compose_shield(std::span<const QaItem> normal_pool, std::span<const QaItem> misleading_pool,
                                         const ShieldConfig& cfg) {
    const auto [p, q] = cfg.normal_ratio;
    if (p + q == 0) throw ConfigError("ratio must have a positive part");
    const std::size_t weights[] = {p, q};
    const auto counts = apportion(cfg.total, weights);

    Rng rng(cfg.seed);
    taxonomy::DatasetManifest m;
    m.name = "shield";
    auto normal = draw(normal_pool, counts[0], cfg.category_quotas, rng, GenKind::Normal);
    auto misleading = draw(misleading_pool, counts[1], cfg.category_quotas, rng, GenKind::Misleading);
    m.items = std::move(normal);
    m.items.insert(m.items.end(), misleading.begin(), misleading.end());

    std::unordered_set<std::string> ids;
    for (const auto& item : m.items) {
        if (!ids.insert(item.id).second) throw DataError("item id '" + item.id + "' appears in both pools");
    }
    std::sort(m.items.begin(), m.items.end(), [](const QaItem& a, const QaItem& b) { return a.id < b.id; });
    return m;
}

std::pair<taxonomy::DatasetManifest, taxonomy::DatasetManifest> split_by_image(std::span<const QaItem> items,
                                                                              double val_fraction, std::uint64_t seed) {
    if (!(val_fraction >= 0.0 && val_fraction <= 1.0)) throw ConfigError("val_fraction must lie in [0, 1]");
    std::set<std::string> unique;
    for (const auto& item : items) {
        if (item.image_id.empty()) throw DataError("item '" + item.id + "' has no image_id");
        unique.insert(item.image_id);
    }
    std::vector<std::string> images(unique.begin(), unique.end());
    Rng rng(seed);
    rng.shuffle(images);
    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(images.size())));
    const std::unordered_set<std::string> val_images(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(n_val));

    taxonomy::DatasetManifest train{"train", {}, std::nullopt};
    taxonomy::DatasetManifest val{"val", {}, std::nullopt};
    for (QaItem item : items) {
        const bool is_val = val_images.count(item.image_id) > 0;
        item.split = is_val ? taxonomy::Split::Val : taxonomy::Split::Train;
        (is_val ? val : train).items.push_back(std::move(item));
    }
    auto by_id = [](const QaItem& a, const QaItem& b) { return a.id < b.id; };
    std::sort(train.items.begin(), train.items.end(), by_id);
    std::sort(val.items.begin(), val.items.end(), by_id);
    return {std::move(train), std::move(val)};
}

std::vector<QaItem> sample_audit(std::span<const QaItem> items, std::size_t n, std::uint64_t seed) {
    std::vector<QaItem> sorted(items.begin(), items.end());
    std::sort(sorted.begin(), sorted.end(), [](const QaItem& a, const QaItem& b) { return a.id < b.id; });
    Rng rng(seed);
    rng.shuffle(sorted);
    sorted.resize(std::min(n, sorted.size()));
    return sorted;
}

} // namespace rshallu::datagen
