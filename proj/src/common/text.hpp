#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rshallu::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_words(std::string_view s);
std::size_t word_count(std::string_view s);
bool icontains(std::string_view haystack, std::string_view needle);
bool istarts_with(std::string_view s, std::string_view prefix);

// Fixed-point decimal, e.g. fixed(0.625, 4) == "0.6250".
std::string fixed(double value, int decimals);

} // namespace rshallu::text
