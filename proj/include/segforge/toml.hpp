#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "segforge/errors.hpp"

namespace segforge::toml {

// Small TOML subset: [sections], bare or "quoted" keys, string / integer /
// float / boolean scalars and single-line arrays of scalars. That covers
// configuration files for this tool; nested tables and multi-line values
// are rejected with a config error.

struct Value;
using Array = std::vector<Value>;

struct Value {
    std::variant<std::string, std::int64_t, double, bool, Array> data;

    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
    bool is_float() const { return std::holds_alternative<double>(data); }
    bool is_bool() const { return std::holds_alternative<bool>(data); }
    bool is_array() const { return std::holds_alternative<Array>(data); }

    const std::string& as_string() const { return std::get<std::string>(data); }
    std::int64_t as_int() const { return std::get<std::int64_t>(data); }
    double as_float() const {
        if (is_int()) return static_cast<double>(as_int());
        return std::get<double>(data);
    }
    bool as_bool() const { return std::get<bool>(data); }
    const Array& as_array() const { return std::get<Array>(data); }
};

using Section = std::map<std::string, Value>;

class Document {
public:
    std::map<std::string, Section> sections;

    bool has(const std::string& section) const { return sections.count(section) > 0; }

    const Section* find(const std::string& section) const {
        auto it = sections.find(section);
        return it == sections.end() ? nullptr : &it->second;
    }

    const Value* find(const std::string& section, const std::string& key) const {
        const Section* s = find(section);
        if (!s) return nullptr;
        auto it = s->find(key);
        return it == s->end() ? nullptr : &it->second;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        const Value* v = find(section, key);
        return v && v->is_string() ? v->as_string() : fallback;
    }

    std::int64_t get_int(const std::string& section, const std::string& key, std::int64_t fallback) const {
        const Value* v = find(section, key);
        return v && v->is_int() ? v->as_int() : fallback;
    }

    double get_float(const std::string& section, const std::string& key, double fallback) const {
        const Value* v = find(section, key);
        return v && (v->is_float() || v->is_int()) ? v->as_float() : fallback;
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        const Value* v = find(section, key);
        return v && v->is_bool() ? v->as_bool() : fallback;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline Error bad(int line, const std::string& what) {
    return config_error("MalformedConfig", "line " + std::to_string(line) + ": " + what);
}

// Parses one scalar token (no arrays).
inline Value parse_scalar(std::string_view tok, int line) {
    tok = trim(tok);
    if (tok.empty()) throw bad(line, "empty value");
    if (tok.front() == '"') {
        if (tok.size() < 2 || tok.back() != '"') throw bad(line, "unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
            char c = tok[i];
            if (c == '\\' && i + 2 < tok.size()) {
                char n = tok[++i];
                switch (n) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: throw bad(line, "unsupported escape");
                }
            } else {
                out += c;
            }
        }
        return Value{out};
    }
    if (tok == "true") return Value{true};
    if (tok == "false") return Value{false};
    std::string t(tok);
    bool looks_float = t.find_first_of(".eE") != std::string::npos;
    char* end = nullptr;
    if (!looks_float) {
        std::int64_t v = std::strtoll(t.c_str(), &end, 10);
        if (end == t.c_str() + t.size()) return Value{v};
    }
    double d = std::strtod(t.c_str(), &end);
    if (end == t.c_str() + t.size()) return Value{d};
    throw bad(line, "cannot parse value '" + t + "'");
}

// Splits a single-line array body on commas that are outside quotes.
inline Value parse_value(std::string_view tok, int line) {
    tok = trim(tok);
    if (tok.empty()) throw bad(line, "empty value");
    if (tok.front() != '[') return parse_scalar(tok, line);
    if (tok.back() != ']') throw bad(line, "unterminated array");
    Array items;
    std::string_view body = tok.substr(1, tok.size() - 2);
    std::size_t start = 0;
    bool in_quotes = false;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        if (i < body.size() && body[i] == '"') in_quotes = !in_quotes;
        if (i == body.size() || (body[i] == ',' && !in_quotes)) {
            std::string_view piece = trim(body.substr(start, i - start));
            if (!piece.empty()) items.push_back(parse_scalar(piece, line));
            start = i + 1;
        }
    }
    return Value{items};
}

}  // namespace detail

inline Document parse(std::string_view text) {
    Document doc;
    std::string current;
    doc.sections[current];  // root section for keys before any header
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, (eol == std::string_view::npos ? text.size() : eol) - pos);
        pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
        ++line_no;

        // strip comments outside quotes
        bool in_quotes = false;
        std::size_t cut = line.size();
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_quotes = !in_quotes;
            if (line[i] == '#' && !in_quotes) {
                cut = i;
                break;
            }
        }
        std::string_view body = detail::trim(line.substr(0, cut));
        if (body.empty()) continue;

        if (body.front() == '[') {
            if (body.back() != ']') throw detail::bad(line_no, "unterminated section header");
            current = std::string(detail::trim(body.substr(1, body.size() - 2)));
            if (current.empty()) throw detail::bad(line_no, "empty section name");
            doc.sections[current];
            continue;
        }

        std::size_t eq = std::string_view::npos;
        in_quotes = false;
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (body[i] == '"') in_quotes = !in_quotes;
            if (body[i] == '=' && !in_quotes) {
                eq = i;
                break;
            }
        }
        if (eq == std::string_view::npos) throw detail::bad(line_no, "expected key = value");
        std::string_view key_tok = detail::trim(body.substr(0, eq));
        std::string key;
        if (!key_tok.empty() && key_tok.front() == '"') {
            Value k = detail::parse_scalar(key_tok, line_no);
            key = k.as_string();
        } else {
            key = std::string(key_tok);
        }
        if (key.empty()) throw detail::bad(line_no, "empty key");
        doc.sections[current][key] = detail::parse_value(body.substr(eq + 1), line_no);
    }
    return doc;
}

inline Document read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("MissingFile", "cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

}  // namespace segforge::toml
