#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "segforge/csv.hpp"
#include "segforge/errors.hpp"
#include "segforge/pms.hpp"

namespace segforge {

namespace detail {

// Folds the common Latin-1 accented letters (UTF-8 encoded) to ASCII so
// phonetic keys treat "Muller" and "Müller" alike. Unknown non-ASCII
// bytes are dropped.
inline std::string ascii_fold(std::string_view s) {
    static const std::unordered_map<unsigned, char> fold = {
        {0xC0, 'a'}, {0xC1, 'a'}, {0xC2, 'a'}, {0xC3, 'a'}, {0xC4, 'a'}, {0xC5, 'a'}, {0xC7, 'c'},
        {0xC8, 'e'}, {0xC9, 'e'}, {0xCA, 'e'}, {0xCB, 'e'}, {0xCC, 'i'}, {0xCD, 'i'}, {0xCE, 'i'},
        {0xCF, 'i'}, {0xD1, 'n'}, {0xD2, 'o'}, {0xD3, 'o'}, {0xD4, 'o'}, {0xD5, 'o'}, {0xD6, 'o'},
        {0xD8, 'o'}, {0xD9, 'u'}, {0xDA, 'u'}, {0xDB, 'u'}, {0xDC, 'u'}, {0xDD, 'y'}, {0xE0, 'a'},
        {0xE1, 'a'}, {0xE2, 'a'}, {0xE3, 'a'}, {0xE4, 'a'}, {0xE5, 'a'}, {0xE7, 'c'}, {0xE8, 'e'},
        {0xE9, 'e'}, {0xEA, 'e'}, {0xEB, 'e'}, {0xEC, 'i'}, {0xED, 'i'}, {0xEE, 'i'}, {0xEF, 'i'},
        {0xF1, 'n'}, {0xF2, 'o'}, {0xF3, 'o'}, {0xF4, 'o'}, {0xF5, 'o'}, {0xF6, 'o'}, {0xF8, 'o'},
        {0xF9, 'u'}, {0xFA, 'u'}, {0xFB, 'u'}, {0xFC, 'u'}, {0xFD, 'y'}, {0xFF, 'y'}};
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (c < 0x80) {
            out += static_cast<char>(std::tolower(c));
        } else if ((c == 0xC3 || c == 0xC2) && i + 1 < s.size()) {
            unsigned code = (c == 0xC3) ? 0xC0u + (static_cast<unsigned char>(s[i + 1]) - 0x80u)
                                        : static_cast<unsigned char>(s[i + 1]);
            auto it = fold.find(code);
            if (it != fold.end()) out += it->second;
            ++i;
        }
    }
    return out;
}

inline std::string_view trim_view(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace detail

// --- field normalization; empty results never match anything -------------

inline std::string normalize_email(std::string_view s) {
    s = detail::trim_view(s);
    std::string out;
    for (char c : s) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::string normalize_phone(std::string_view s) {
    std::string out;
    for (char c : s)
        if (c >= '0' && c <= '9') out += c;
    return out;
}

inline std::string normalize_address(std::string_view s) {
    s = detail::trim_view(s);
    std::string out;
    bool last_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!out.empty() && !last_space) out += ' ';
            last_space = true;
        } else {
            out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            last_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

inline std::string normalize_name(std::string_view s) { return detail::ascii_fold(detail::trim_view(s)); }

// American Soundex: first letter kept, consonants coded 1-6, vowels drop,
// adjacent duplicate codes collapse (also across 'h'/'w'), padded to a
// letter plus three digits. Case- and diacritic-insensitive.
inline std::string phonetic_key(std::string_view name) {
    std::string folded = normalize_name(name);
    std::string letters;
    for (char c : folded)
        if (c >= 'a' && c <= 'z') letters += c;
    if (letters.empty()) throw data_error("EmptyName", "cannot build a phonetic key from an empty name");

    auto code_of = [](char c) -> char {
        switch (c) {
            case 'b': case 'f': case 'p': case 'v': return '1';
            case 'c': case 'g': case 'j': case 'k': case 'q': case 's': case 'x': case 'z': return '2';
            case 'd': case 't': return '3';
            case 'l': return '4';
            case 'm': case 'n': return '5';
            case 'r': return '6';
            default: return '0';  // vowels, h, w, y
        }
    };

    std::string key;
    key += static_cast<char>(std::toupper(static_cast<unsigned char>(letters[0])));
    char prev_code = code_of(letters[0]);
    for (std::size_t i = 1; i < letters.size() && key.size() < 4; ++i) {
        char c = letters[i];
        char code = code_of(c);
        if (c == 'h' || c == 'w') continue;  // transparent, keep prev_code
        if (code != '0' && code != prev_code) key += code;
        prev_code = code;
    }
    while (key.size() < 4) key += '0';
    return key;
}

// --- match and merge ------------------------------------------------------

enum class MatchField { FirstName, LastName, Email, Phone, Address };
enum class MatchMode { Exact, Phonetic };

// One rule = a conjunction of field comparisons; the rule set is a
// disjunction. A profile missing any field of a rule cannot match on it.
struct MergeRule {
    std::vector<std::pair<MatchField, MatchMode>> terms;
};

inline void check_rules(const std::vector<MergeRule>& rules) {
    if (rules.empty()) throw config_error("InvalidConfig", "merge rule set must not be empty");
    for (const auto& rule : rules) {
        if (rule.terms.empty()) throw config_error("InvalidConfig", "merge rule must use at least one field");
        for (const auto& [field, mode] : rule.terms) {
            bool name_field = field == MatchField::FirstName || field == MatchField::LastName;
            if (mode == MatchMode::Phonetic && !name_field)
                throw config_error("InvalidConfig", "phonetic matching is only valid for name fields");
        }
    }
}

// Merge iff (same normalized email) or (phonetic first + phonetic last +
// same phone) or (phonetic first + phonetic last + same address).
inline std::vector<MergeRule> default_merge_rules() {
    return {
        MergeRule{{{MatchField::Email, MatchMode::Exact}}},
        MergeRule{{{MatchField::FirstName, MatchMode::Phonetic},
                   {MatchField::LastName, MatchMode::Phonetic},
                   {MatchField::Phone, MatchMode::Exact}}},
        MergeRule{{{MatchField::FirstName, MatchMode::Phonetic},
                   {MatchField::LastName, MatchMode::Phonetic},
                   {MatchField::Address, MatchMode::Exact}}},
    };
}

struct GoldenProfile {
    std::string golden_id;                  // smallest member profile_id
    std::vector<std::string> member_ids;    // sorted
    std::string first_name;
    std::string last_name;
    std::string email;
    std::string phone;
    std::string address;
    std::string loyalty_level;              // max over members
    bool marketing_opt_in = false;          // OR over members
};

using GoldenMap = std::map<std::string, std::string>;  // profile_id -> golden_id

namespace detail {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

inline std::string rule_key(const Profile& p, const MergeRule& rule) {
    std::string key;
    for (const auto& [field, mode] : rule.terms) {
        std::string part;
        switch (field) {
            case MatchField::FirstName: part = normalize_name(p.first_name); break;
            case MatchField::LastName: part = normalize_name(p.last_name); break;
            case MatchField::Email: part = normalize_email(p.email); break;
            case MatchField::Phone: part = normalize_phone(p.phone); break;
            case MatchField::Address: part = normalize_address(p.address); break;
        }
        if (part.empty()) return {};  // absence never matches
        if (mode == MatchMode::Phonetic) {
            bool has_letter = std::any_of(part.begin(), part.end(), [](char c) { return c >= 'a' && c <= 'z'; });
            if (!has_letter) return {};  // nothing to encode, treat as absent
            part = phonetic_key(part);
        }
        key += part;
        key += '\x1f';
    }
    return key;
}

}  // namespace detail

// Transitive closure of all pairwise matches under any rule. Output is a
// partition of the input: every profile lands in exactly one golden
// profile and the result does not depend on input order.
inline std::vector<GoldenProfile> match_merge(const std::vector<Profile>& profiles,
                                              const std::vector<MergeRule>& rules) {
    check_rules(rules);
    const std::size_t n = profiles.size();
    detail::UnionFind uf(n);

    for (const auto& rule : rules) {
        std::unordered_map<std::string, std::size_t> first_with_key;
        first_with_key.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::string key = detail::rule_key(profiles[i], rule);
            if (key.empty()) continue;
            auto [it, inserted] = first_with_key.emplace(std::move(key), i);
            if (!inserted) uf.unite(it->second, i);
        }
    }

    std::map<std::string, std::vector<std::size_t>> groups;  // golden_id -> member indexes
    {
        std::unordered_map<std::size_t, std::string> root_min_id;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = uf.find(i);
            auto it = root_min_id.find(r);
            if (it == root_min_id.end())
                root_min_id.emplace(r, profiles[i].profile_id);
            else if (profiles[i].profile_id < it->second)
                it->second = profiles[i].profile_id;
        }
        for (std::size_t i = 0; i < n; ++i) groups[root_min_id.at(uf.find(i))].push_back(i);
    }

    std::vector<GoldenProfile> out;
    out.reserve(groups.size());
    for (auto& [golden_id, members] : groups) {
        GoldenProfile g;
        g.golden_id = golden_id;

        // Contact survivorship: most recent created_at wins per field,
        // among members that have the field; ties go to the smaller id.
        auto better = [&](std::size_t a, std::size_t b) {
            const Profile& pa = profiles[a];
            const Profile& pb = profiles[b];
            if (pa.created_at != pb.created_at) return pa.created_at > pb.created_at;
            return pa.profile_id < pb.profile_id;
        };
        std::sort(members.begin(), members.end(), better);
        auto survive = [&](auto field_of) {
            for (std::size_t idx : members) {
                const std::string& v = field_of(profiles[idx]);
                if (!v.empty()) return v;
            }
            return std::string();
        };
        g.first_name = survive([](const Profile& p) -> const std::string& { return p.first_name; });
        g.last_name = survive([](const Profile& p) -> const std::string& { return p.last_name; });
        g.email = survive([](const Profile& p) -> const std::string& { return p.email; });
        g.phone = survive([](const Profile& p) -> const std::string& { return p.phone; });
        g.address = survive([](const Profile& p) -> const std::string& { return p.address; });
        for (std::size_t idx : members) {
            const Profile& p = profiles[idx];
            if (p.loyalty_level > g.loyalty_level) g.loyalty_level = p.loyalty_level;
            g.marketing_opt_in = g.marketing_opt_in || p.marketing_opt_in;
            g.member_ids.push_back(p.profile_id);
        }
        std::sort(g.member_ids.begin(), g.member_ids.end());
        out.push_back(std::move(g));
    }
    return out;
}

inline GoldenMap golden_map_of(const std::vector<GoldenProfile>& goldens) {
    GoldenMap map;
    for (const auto& g : goldens)
        for (const auto& member : g.member_ids) map[member] = g.golden_id;
    return map;
}

inline void write_golden_map(const std::filesystem::path& path, const GoldenMap& map) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(map.size());
    for (const auto& [pid, gid] : map) rows.push_back({pid, gid});
    csv::write_file(path, {"profile_id", "golden_id"}, rows);
}

inline GoldenMap read_golden_map(const std::filesystem::path& path) {
    csv::Table t = csv::read_file(path);
    int c_pid = detail::require_column(t, "profile_id", "golden_map.csv");
    int c_gid = detail::require_column(t, "golden_id", "golden_map.csv");
    GoldenMap map;
    for (const auto& row : t.rows) map[row[static_cast<std::size_t>(c_pid)]] = row[static_cast<std::size_t>(c_gid)];
    return map;
}

}  // namespace segforge
