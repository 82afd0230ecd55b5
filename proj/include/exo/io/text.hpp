#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "exo/error.hpp"

namespace exo::io {

/// Shortest representation that round-trips.
inline std::string fmt_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

/// Fixed number of decimals, for human-facing tables.
inline std::string fmt_fixed(double v, int decimals)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    return {buf, res.ptr};
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes through a sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& p, std::string_view content)
{
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    const auto tmp = std::filesystem::path(p.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, p, ec);
    require(!ec, ErrorKind::Io, "cannot move " + tmp.string() + " into place: " + ec.message());
}

inline std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

inline std::vector<std::string_view> split_csv_row(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return cells;
}

inline double parse_double(std::string_view s, const std::string& where)
{
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    require(res.ec == std::errc() && res.ptr == end && !s.empty(), ErrorKind::Schema,
            where + ": '" + std::string(s) + "' is not a number");
    return v;
}

/// Header + numeric-or-text rows, comment lines (#) and blank lines skipped.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; ///< 1-based source line of each row

    std::ptrdiff_t column(std::string_view name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<std::ptrdiff_t>(i);
        return -1;
    }
};

inline CsvTable parse_csv(std::string_view text, const std::string& source)
{
    CsvTable t;
    const auto lines = split_lines(text);
    std::size_t lineno = 0;
    for (auto raw : lines) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto cells = split_csv_row(line);
        if (t.header.empty()) {
            for (auto c : cells) t.header.emplace_back(c);
            continue;
        }
        require(cells.size() == t.header.size(), ErrorKind::Schema,
                source + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                    " columns, found " + std::to_string(cells.size()));
        t.rows.emplace_back(cells.begin(), cells.end());
        t.line_numbers.push_back(lineno);
    }
    require(!t.header.empty(), ErrorKind::InsufficientData, source + ": empty input");
    return t;
}

inline std::string where(const std::string& source, std::size_t line)
{
    return source + ":" + std::to_string(line);
}

} // namespace exo::io
