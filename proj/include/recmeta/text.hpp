#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "recmeta/errors.hpp"

namespace recmeta {

// Numbers are written with 12 significant digits everywhere. Files produced
// by the pipeline must be byte-identical across reruns, so all emitters share
// this one formatter.
inline std::string fmt_g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Round to the double nearest the 12-digit decimal representation. Values
// stored in reports pass through this so that CSV and JSON emissions parse
// back to bit-identical doubles.
inline double round_g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    double out = 0.0;
    std::sscanf(buf, "%lf", &out);
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    double value = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return value;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

inline std::vector<std::string> split(std::string_view line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Splits file content into lines, dropping a trailing '\r' on each line and
// skipping lines that are completely empty.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace recmeta
