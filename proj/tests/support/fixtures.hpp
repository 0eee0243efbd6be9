#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "taxonomy/taxonomy.hpp"

namespace fixtures {

using rshallu::taxonomy::Category;
using rshallu::taxonomy::DatasetManifest;
using rshallu::taxonomy::QaItem;
using rshallu::taxonomy::Split;

inline constexpr std::array<std::size_t, 5> kTrainCounts = {84, 2079, 6407, 4779, 645};
inline constexpr std::array<std::size_t, 5> kValCounts = {14, 190, 600, 450, 148};

inline std::string padded(const char* prefix, std::size_t n) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, n);
    return buf;
}

// 13,994 train items over 1,000 images and 1,402 val items over 261 images,
// with the category counts of the public check set.
inline DatasetManifest check_set_manifest() {
    DatasetManifest m;
    m.name = "check-set";
    rshallu::taxonomy::ExpectedCounts expected;
    std::size_t serial = 0;
    auto fill = [&](Split split, const std::array<std::size_t, 5>& counts, const char* img_prefix, std::size_t n_images) {
        std::size_t k = 0;
        for (std::size_t c = 0; c < 5; ++c) {
            const Category cat = rshallu::taxonomy::kAllCategories[c];
            expected[split][cat] = counts[c];
            for (std::size_t i = 0; i < counts[c]; ++i, ++k) {
                QaItem item;
                item.id = padded("q", serial++);
                item.image_id = padded(img_prefix, k % n_images);
                item.category = cat;
                item.question = "Is there a runway?";
                item.answer = "Yes";
                item.split = split;
                m.items.push_back(item);
            }
        }
    };
    fill(Split::Train, kTrainCounts, "tr", 1000);
    fill(Split::Val, kValCounts, "va", 261);
    m.expected_counts = expected;
    return m;
}

// Pool of items spread over categories; ids carry the prefix.
inline std::vector<QaItem> pool(const char* prefix, std::size_t n, bool misleading) {
    std::vector<QaItem> out;
    for (std::size_t i = 0; i < n; ++i) {
        QaItem item;
        item.id = padded(prefix, i);
        item.image_id = padded("img", i / 6);
        item.category = rshallu::taxonomy::kAllCategories[i % 5];
        item.question = misleading ? "What color is the stadium next to the lake?" : "How many planes are parked?";
        item.answer = misleading ? "There is no stadium in the image." : "Three.";
        item.is_misleading = misleading;
        out.push_back(item);
    }
    return out;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("rshallu-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace fixtures
