#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "segforge/errors.hpp"

namespace segforge::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by name, or -1.
    int column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

// RFC-4180 parse of a whole document: quoted fields, "" escapes,
// embedded separators/newlines inside quotes, CRLF tolerated.
inline Table parse(std::string_view text, const std::string& where) {
    Table table;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_has_data = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        if (table.header.empty())
            table.header = std::move(row);
        else
            table.rows.push_back(std::move(row));
        row.clear();
        row_has_data = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_has_data = true;
                break;
            case ',':
                end_field();
                row_has_data = true;
                break;
            case '\r':
                break;
            case '\n':
                if (row_has_data || !field.empty() || !row.empty()) end_row();
                break;
            default:
                field += c;
                row_has_data = true;
        }
    }
    if (in_quotes) throw data_error("MalformedCsv", "unterminated quote in " + where);
    if (row_has_data || !field.empty() || !row.empty()) end_row();

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != table.header.size())
            throw data_error("MalformedCsv", where + " row " + std::to_string(r + 2) + " has " +
                                                 std::to_string(table.rows[r].size()) + " fields, expected " +
                                                 std::to_string(table.header.size()));
    }
    return table;
}

inline Table read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("MissingFile", "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.filename().string());
}

inline std::string escape(std::string_view field) {
    bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string join_row(const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) line += ',';
        line += escape(fields[i]);
    }
    line += '\n';
    return line;
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("WriteFailed", "cannot write " + path.string());
    out << join_row(header);
    for (const auto& row : rows) out << join_row(row);
}

// Numeric cell rendering used by every tabular export: full integers as
// integers, everything else rounded to 3 decimals with trailing zeros
// trimmed ("0.025", "-0.067", "0", "0.4").
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    double r = std::nearbyint(v);
    if (r == v && std::fabs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    std::string s = buf;
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
}

// Round to 3 decimals exactly as the CSV writer would render the value,
// so in-memory numbers and file round-trips cannot diverge.
inline double quantize3(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return std::strtod(buf, nullptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
    if (s.empty()) throw data_error("MalformedNumber", "empty numeric field in " + where);
    char* end = nullptr;
    std::string tmp(s);
    double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size())
        throw data_error("MalformedNumber", "bad number '" + tmp + "' in " + where);
    return v;
}

inline long long parse_int(std::string_view s, const std::string& where) {
    if (s.empty()) throw data_error("MalformedNumber", "empty integer field in " + where);
    char* end = nullptr;
    std::string tmp(s);
    long long v = std::strtoll(tmp.c_str(), &end, 10);
    if (end != tmp.c_str() + tmp.size())
        throw data_error("MalformedNumber", "bad integer '" + tmp + "' in " + where);
    return v;
}

}  // namespace segforge::csv
