#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "skyspec/error.hpp"

namespace skyspec::csv {

/// Shortest round-trip decimal; "nan", "inf", "-inf" for the specials.
inline std::string format(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, end);
}

inline std::string format(std::uint64_t v) { return std::to_string(v); }
inline std::string format(std::int64_t v) { return std::to_string(v); }
inline std::string format(int v) { return std::to_string(v); }
inline std::string format(const std::string& v) { return v; }
inline std::string format(const char* v) { return v; }

class Writer {
public:
    explicit Writer(const std::vector<std::string>& header) { row_strings(header); }

    template <class... Ts>
    void row(const Ts&... values)
    {
        std::size_t i = 0;
        ((out_ << (i++ ? "," : "") << format(values)), ...);
        out_ << '\n';
    }

    void row_strings(const std::vector<std::string>& values)
    {
        for (std::size_t i = 0; i < values.size(); ++i) {
            out_ << (i ? "," : "") << values[i];
        }
        out_ << '\n';
    }

    std::string str() const { return out_.str(); }

    void save(const std::filesystem::path& path) const
    {
        if (path.has_parent_path()) {
            std::filesystem::create_directories(path.parent_path());
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) {
            throw std::runtime_error("cannot write " + path.string());
        }
        f << out_.str();
    }

private:
    std::ostringstream out_;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        throw FormatError("csv: missing column '" + std::string(name) + "'");
    }
};

inline std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

/// Plain comma-separated file with a header row; no quoting.
inline Table read(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) {
        throw FormatError("cannot read " + path.string());
    }
    Table t;
    std::string line;
    if (!std::getline(f, line)) {
        throw FormatError(path.string() + ": empty file");
    }
    t.header = split_line(line);
    while (std::getline(f, line)) {
        if (line.empty()) {
            continue;
        }
        auto cells = split_line(line);
        if (cells.size() != t.header.size()) {
            throw FormatError(path.string() + ": row width differs from header");
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

inline double parse_double(const std::string& s)
{
    if (s == "nan") {
        return std::nan("");
    }
    if (s == "inf") {
        return INFINITY;
    }
    if (s == "-inf") {
        return -INFINITY;
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw FormatError("csv: not a number: '" + s + "'");
    }
    return v;
}

} // namespace skyspec::csv
