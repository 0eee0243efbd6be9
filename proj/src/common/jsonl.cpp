#include "common/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace rshallu::jsonl {

std::vector<Line> read(std::istream& in) {
    std::vector<Line> lines;
    std::string raw;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            lines.push_back({number, json::parse(raw)});
        } catch (const json::parse_error& e) {
            throw FormatError(number, std::string("malformed record: ") + e.what());
        }
        if (!lines.back().value.is_object()) {
            throw FormatError(number, "record is not an object");
        }
    }
    return lines;
}

std::vector<Line> read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read(in);
}

std::string dump(const json& value) { return value.dump(-1, ' ', false, json::error_handler_t::strict); }

void write_file(const std::filesystem::path& path, const std::vector<json>& records) {
    std::ostringstream out;
    for (const auto& r : records) out << dump(r) << '\n';
    write_text(path, out.str());
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const json& require(const Line& line, const char* key) {
    auto it = line.value.find(key);
    if (it == line.value.end()) throw FormatError(line.number, std::string("missing field '") + key + "'");
    return *it;
}

std::string require_string(const Line& line, const char* key) {
    const json& v = require(line, key);
    if (!v.is_string()) throw FormatError(line.number, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

} // namespace rshallu::jsonl
