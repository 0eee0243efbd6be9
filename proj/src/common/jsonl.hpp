#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace rshallu::jsonl {

using nlohmann::json;

// One parsed record with its 1-based source line.
struct Line {
    std::size_t number;
    json value;
};

// Blank lines are skipped; a malformed line throws FormatError.
std::vector<Line> read(std::istream& in);
std::vector<Line> read_file(const std::filesystem::path& path);

std::string dump(const json& value);
void write_file(const std::filesystem::path& path, const std::vector<json>& records);
void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

// Typed field access that reports the offending line on failure.
const json& require(const Line& line, const char* key);
std::string require_string(const Line& line, const char* key);

} // namespace rshallu::jsonl
