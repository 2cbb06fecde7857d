#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "segforge/errors.hpp"

namespace segforge {

// Calendar date, day precision, stored as days since 1970-01-01.
// Conversions use the civil-calendar algorithms that are exact over the
// full proleptic Gregorian range we care about.
class Date {
public:
    constexpr Date() : days_(0) {}
    constexpr explicit Date(std::int64_t days_since_epoch) : days_(days_since_epoch) {}

    static constexpr Date from_ymd(int year, int month, int day) {
        return Date(days_from_civil(year, month, day));
    }

    static std::optional<Date> parse(std::string_view iso) {
        if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
        auto digits = [](std::string_view s) {
            for (char c : s)
                if (c < '0' || c > '9') return false;
            return true;
        };
        if (!digits(iso.substr(0, 4)) || !digits(iso.substr(5, 2)) || !digits(iso.substr(8, 2)))
            return std::nullopt;
        int y = to_int(iso.substr(0, 4));
        int m = to_int(iso.substr(5, 2));
        int d = to_int(iso.substr(8, 2));
        if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
        Date candidate = from_ymd(y, m, d);
        int cy, cm, cd;
        candidate.to_ymd(cy, cm, cd);
        if (cy != y || cm != m || cd != d) return std::nullopt;  // e.g. Feb 30
        return candidate;
    }

    // Parse or throw a data error that names the offending row.
    static Date parse_or_throw(std::string_view iso, const std::string& where) {
        auto d = parse(iso);
        if (!d) throw data_error("InvalidDate", "bad ISO-8601 date '" + std::string(iso) + "' in " + where);
        return *d;
    }

    void to_ymd(int& year, int& month, int& day) const {
        civil_from_days(days_, year, month, day);
    }

    std::string to_string() const {
        int y, m, d;
        to_ymd(y, m, d);
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
        return buf;
    }

    constexpr std::int64_t days() const { return days_; }

    // 0 = Monday .. 6 = Sunday.
    constexpr int weekday() const { return static_cast<int>(((days_ + 3) % 7 + 7) % 7); }

    constexpr int year() const {
        int y, m, d;
        civil_from_days(days_, y, m, d);
        return y;
    }

    constexpr Date add_days(std::int64_t n) const { return Date(days_ + n); }

    friend constexpr bool operator==(Date a, Date b) { return a.days_ == b.days_; }
    friend constexpr bool operator!=(Date a, Date b) { return a.days_ != b.days_; }
    friend constexpr bool operator<(Date a, Date b) { return a.days_ < b.days_; }
    friend constexpr bool operator<=(Date a, Date b) { return a.days_ <= b.days_; }
    friend constexpr bool operator>(Date a, Date b) { return a.days_ > b.days_; }
    friend constexpr bool operator>=(Date a, Date b) { return a.days_ >= b.days_; }
    friend constexpr std::int64_t operator-(Date a, Date b) { return a.days_ - b.days_; }

private:
    static constexpr int to_int(std::string_view s) {
        int v = 0;
        for (char c : s) v = v * 10 + (c - '0');
        return v;
    }

    static constexpr std::int64_t days_from_civil(int y, int m, int d) {
        y -= m <= 2;
        const int era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                             static_cast<unsigned>(d) - 1u;
        const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
        return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
    }

    static constexpr void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
        z += 719468;
        const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(z - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
        month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
        year = static_cast<int>(y + (month <= 2));
    }

    std::int64_t days_;
};

}  // namespace segforge
