#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "common/error.hpp"
#include "taxonomy/taxonomy.hpp"

namespace rshallu::datagen {

using taxonomy::Category;
using taxonomy::QaItem;

enum class GenKind { Normal, Misleading };
std::string_view to_string(GenKind k);
std::optional<GenKind> parse_gen_kind(std::string_view s);

// Check data pairs clean and hallucinated answers in one batch; shield data
// asks for accurate answers only.
enum class GenPurpose { Check, Shield };
std::optional<GenPurpose> parse_gen_purpose(std::string_view s);

struct GenRequest {
    Category category = Category::ObjectExistence;
    std::string caption;
    std::optional<std::string> image_ref; // set only when the generator sees the image
    std::size_t count = 6;
    GenKind kind = GenKind::Normal;
    GenPurpose purpose = GenPurpose::Check;
    std::string instruction;
};

class RoutingError : public UsageError {
public:
    explicit RoutingError(const std::string& what) : UsageError("routing error: " + what) {}
};

// Object-relation requests need the image; the other normal categories are
// generated from the caption alone. Misleading requests embed the five
// false-premise rules and keep the image when one is given.
GenRequest build_gen_request(Category category, std::string_view caption, const std::optional<std::string>& image_ref,
                             GenKind kind, GenPurpose purpose = GenPurpose::Check, std::size_t count = 6);

// Object types offered to the misleading-question generator.
const std::vector<std::string>& common_rs_objects();

struct GenPair {
    std::size_t position = 0; // 1-based pair number
    std::string question;
    std::string answer;
    std::optional<bool> is_hallucinated_answer;
};

struct GenBatch {
    std::vector<GenPair> pairs;
};

class PartialBatchError : public DataError {
public:
    PartialBatchError(std::size_t expected, std::vector<GenPair> salvage)
        : DataError("partial batch: expected " + std::to_string(expected) + " pairs, parsed " + std::to_string(salvage.size())),
          salvage_(std::move(salvage)) {}
    const std::vector<GenPair>& salvage() const noexcept { return salvage_; }

private:
    std::vector<GenPair> salvage_;
};

// Parses "Q<k>: ..." / "A<k>: ..." pairs. With positional labels the first
// half of the batch is clean and the second half hallucinated.
GenBatch parse_gen_batch(std::string_view response, std::size_t expected_count, bool positional_labels = true);

// Turns parsed pairs into QA items for one image.
std::vector<QaItem> batch_items(const GenBatch& batch, const GenRequest& request, std::string_view image_id);

// Long answers opening with Yes/No collapse to the bare "Yes" or "No".
inline constexpr std::size_t kYesNoWordThreshold = 3;
std::string normalize_yesno(std::string_view answer);

struct ShieldConfig {
    std::size_t total = 30000;
    std::pair<std::size_t, std::size_t> normal_ratio = {1, 1}; // normal : misleading
    std::map<Category, std::size_t> category_quotas;           // relative weights, empty = any
    std::size_t max_answer_len = 25;                           // words
    std::uint64_t seed = 0;
};

struct FilterResult {
    std::vector<QaItem> kept;
    std::vector<QaItem> flagged; // mention the caption; route to paraphrase
    std::vector<QaItem> removed; // answer too long
};

// Phrases that reveal the generator saw a caption.
const std::vector<std::string>& caption_phrases();

FilterResult filter_and_flag(std::span<const QaItem> items, const ShieldConfig& cfg, std::string_view caption);

// Largest-remainder split of total over the given weights; ties go to the
// earlier entry.
std::vector<std::size_t> apportion(std::size_t total, std::span<const std::size_t> weights);

class ShortfallError : public DataError {
public:
    explicit ShortfallError(const std::string& what) : DataError("insufficient pool: " + what) {}
};

taxonomy::DatasetManifest compose_shield(std::span<const QaItem> normal_pool, std::span<const QaItem> misleading_pool,
                                         const ShieldConfig& cfg);

// Splits over image ids so all items of one image land together.
std::pair<taxonomy::DatasetManifest, taxonomy::DatasetManifest> split_by_image(std::span<const QaItem> items,
                                                                              double val_fraction, std::uint64_t seed);

// Draws n items (or all, if fewer) for manual review.
std::vector<QaItem> sample_audit(std::span<const QaItem> items, std::size_t n, std::uint64_t seed);

} // namespace rshallu::datagen
