#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "taxonomy/taxonomy.hpp"

namespace rshallu::metrics {

using taxonomy::Category;
using taxonomy::DatasetManifest;
using taxonomy::Judgment;

struct HfReport {
    std::map<Category, double> per_category;    // categories with >= 1 judged item
    double overall = 0.0;                       // mean over all judged items
    std::map<Category, std::size_t> counts;
    std::vector<Category> omitted;              // categories with no judged items
    std::size_t n_items = 0;
};

// Entries are nullopt where the ratio is undefined (expert HF of zero, or the
// category missing on one side).
struct EsReport {
    std::map<Category, std::optional<double>> per_category;
    std::optional<double> overall;
};

struct AccuracyReport {
    std::map<Category, double> per_category;
    std::map<Category, std::size_t> counts;
    double overall = 0.0;
    std::size_t n_items = 0;
};

class BinaryPreconditionError : public DataError {
public:
    explicit BinaryPreconditionError(const std::string& what) : DataError("binary precondition: " + what) {}
};

// Per-category and overall hallucination-free rates. Every judgment must name
// a manifest item, and each item may be judged once.
HfReport hf(std::span<const Judgment> judgments, const DatasetManifest& manifest);

// Relative error of an automated checker against the expert; the expert
// report is always the denominator.
EsReport es(const HfReport& hf_auto, const HfReport& hf_expert);

// Mean over reports per category, skipping undefined entries.
EsReport mes(std::span<const EsReport> reports);

// Fraction of verdicts agreeing with binary labels, joined on item_id.
AccuracyReport checker_accuracy(std::span<const Judgment> verdicts, std::span<const Judgment> labels,
                                const DatasetManifest& manifest);

// --- report files (4 decimal places, "undefined" for missing ES) -----------

struct NamedHf {
    std::string model;
    HfReport report;
};
struct NamedEs {
    std::string checker;
    std::string model;
    EsReport report;
};

std::string hf_csv(std::span<const NamedHf> reports);
std::string radar_csv(std::span<const NamedHf> reports);
std::string es_csv(std::span<const NamedEs> rows, const EsReport& mes_row);
std::string accuracy_csv(const AccuracyReport& report);

} // namespace rshallu::metrics
