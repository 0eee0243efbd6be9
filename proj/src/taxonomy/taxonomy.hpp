#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rshallu::taxonomy {

// Two image-level and three object-level hallucination categories.
enum class Category {
    ImageAttribute,
    ImageScene,
    ObjectExistence,
    ObjectAttribute,
    ObjectRelation,
};

inline constexpr std::array<Category, 5> kAllCategories = {
    Category::ImageAttribute, Category::ImageScene, Category::ObjectExistence,
    Category::ObjectAttribute, Category::ObjectRelation,
};

std::string_view to_string(Category c);
std::string_view short_code(Category c); // IA, IS, OE, OA, OR
// Accepts the full name or the two-letter code.
std::optional<Category> parse_category(std::string_view s);

enum class Modality { Color, Panchromatic, Unknown };
std::string_view to_string(Modality m);
std::optional<Modality> parse_modality(std::string_view s);

enum class Split { Train, Val, Eval, Unassigned };
std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view s);

struct QaItem {
    std::string id;
    std::string image_id;
    Category category = Category::ObjectExistence;
    std::string question;
    std::string answer;
    bool is_misleading = false;
    std::optional<bool> is_hallucinated_answer; // set only on generated items
    Modality modality = Modality::Unknown;
    Split split = Split::Unassigned;

    bool operator==(const QaItem&) const = default;
};

using ExpectedCounts = std::map<Split, std::map<Category, std::size_t>>;

struct DatasetManifest {
    std::string name;
    std::vector<QaItem> items;
    std::optional<ExpectedCounts> expected_counts;
};

// Judgment score restricted to {0, 0.5, 1}; kept as half-points so file
// round trips never drift.
class Score {
public:
    static Score zero() { return Score(0); }
    static Score half() { return Score(1); }
    static Score one() { return Score(2); }
    static std::optional<Score> parse(std::string_view s);
    static std::optional<Score> from_value(double v);

    double value() const { return halves_ * 0.5; }
    bool is_binary() const { return halves_ != 1; }
    std::string str() const; // "0.0", "0.5", "1.0"

    bool operator==(const Score&) const = default;

private:
    explicit Score(int halves) : halves_(halves) {}
    int halves_;
};

enum class JudgmentSource { Expert, Automated };
std::string_view to_string(JudgmentSource s);

struct Judgment {
    std::string item_id;
    std::string model_name;
    std::string answer;
    Score score = Score::zero();
    JudgmentSource source = JudgmentSource::Automated;

    bool operator==(const Judgment&) const = default;
};

struct Violation {
    std::string item_id; // "-" when the rule is not tied to one item
    std::string rule;    // duplicate-id, empty-answer, count-mismatch, split-leakage
    std::string detail;
};

// Empty result iff every manifest invariant holds.
std::vector<Violation> validate_manifest(const DatasetManifest& manifest);

// Image ids assigned to more than one of train/val/eval, ascending.
std::vector<std::string> leaked_image_ids(const std::vector<QaItem>& items);

std::map<Split, std::map<Category, std::size_t>> count_by_split(const std::vector<QaItem>& items);

nlohmann::json to_json(const QaItem& item);
nlohmann::json to_json(const Judgment& j);

// Manifest files: a header line {"manifest": name, "expected_counts": ...}
// followed by one QaItem per line. Serialization is canonical: items by id
// ascending, keys sorted.
DatasetManifest read_manifest(std::istream& in);
DatasetManifest load_manifest(const std::filesystem::path& path);
std::string serialize_manifest(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Item-only line files (generation pools); no header line.
std::vector<QaItem> load_items(const std::filesystem::path& path);
void save_items(const std::vector<QaItem>& items, const std::filesystem::path& path);

std::vector<Judgment> read_judgments(std::istream& in);
std::vector<Judgment> load_judgments(const std::filesystem::path& path);
std::string serialize_judgments(std::vector<Judgment> judgments);
void save_judgments(const std::vector<Judgment>& judgments, const std::filesystem::path& path);

} // namespace rshallu::taxonomy
