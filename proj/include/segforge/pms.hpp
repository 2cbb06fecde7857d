#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "segforge/csv.hpp"
#include "segforge/date.hpp"
#include "segforge/errors.hpp"

namespace segforge {

enum class ResStatus { Historic, Cancelled, NoShow };
enum class ChannelClass { Direct, Indirect };
enum class TxnClass { Room, Ancillary, Other };

inline const char* to_string(ResStatus s) {
    switch (s) {
        case ResStatus::Historic: return "Historic";
        case ResStatus::Cancelled: return "Cancelled";
        case ResStatus::NoShow: return "NoShow";
    }
    return "?";
}

inline const char* to_string(TxnClass c) {
    switch (c) {
        case TxnClass::Room: return "Room";
        case TxnClass::Ancillary: return "Ancillary";
        case TxnClass::Other: return "Other";
    }
    return "?";
}

// Optional contact fields are plain strings; empty means withheld.
struct Profile {
    std::string profile_id;
    std::string first_name;
    std::string last_name;
    std::string email;
    std::string phone;
    std::string address;
    std::string loyalty_level;  // empty = no loyalty status
    bool marketing_opt_in = false;
    Date created_at;
};

struct Reservation {
    std::string reservation_id;
    std::string profile_id;
    ResStatus status = ResStatus::Historic;
    Date booking_date;
    Date arrival_date;
    Date departure_date;
    std::string source_channel;
    std::string group_id;    // empty = none
    std::string company_id;  // empty = none
    std::string agency_id;   // empty = none
    int lead_time = 0;       // arrival - booking, days
    int length_of_stay = 0;  // departure - arrival, days
};

// Amounts in integer minor units (cents) to keep revenue sums exact.
struct Folio {
    std::string folio_id;
    std::string reservation_id;
    std::string transaction_code;
    std::int64_t amount_cents = 0;
    TxnClass classification = TxnClass::Other;
};

using ChannelMap = std::map<std::string, ChannelClass>;
using TxnMap = std::map<std::string, TxnClass>;

// Immutable after ingest; safe to share across threads.
struct Dataset {
    std::vector<Profile> profiles;
    std::vector<Reservation> reservations;
    std::vector<Folio> folios;
    ChannelMap channel_map;

    std::unordered_map<std::string, std::size_t> profile_index;
    std::unordered_map<std::string, std::size_t> reservation_index;

    ChannelClass channel_class(const std::string& channel) const {
        auto it = channel_map.find(channel);
        if (it == channel_map.end())
            throw data_error("UnmappedChannel", "channel '" + channel + "' has no direct/indirect mapping");
        return it->second;
    }

    void rebuild_indexes() {
        profile_index.clear();
        reservation_index.clear();
        for (std::size_t i = 0; i < profiles.size(); ++i) profile_index.emplace(profiles[i].profile_id, i);
        for (std::size_t i = 0; i < reservations.size(); ++i)
            reservation_index.emplace(reservations[i].reservation_id, i);
    }
};

struct Violation {
    std::string kind;     // e.g. DanglingForeignKey, LengthOfStay
    std::string table;    // profiles | reservations | folios
    std::string row_id;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> entries;
    bool ok() const { return entries.empty(); }
};

namespace detail {

inline std::string parse_field(const std::vector<std::string>& row, int col) {
    return col >= 0 ? row[static_cast<std::size_t>(col)] : std::string();
}

inline int require_column(const csv::Table& t, const char* name, const std::string& file) {
    int c = t.column(name);
    if (c < 0) throw data_error("MissingColumn", file + " lacks required column '" + std::string(name) + "'");
    return c;
}

inline bool parse_bool(const std::string& s, const std::string& where) {
    std::string v;
    for (char c : s) v += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no" || v.empty()) return false;
    throw data_error("MalformedBool", "bad boolean '" + s + "' in " + where);
}

// "123.45" -> 12345; tolerates a missing fraction part.
inline std::int64_t parse_amount_cents(const std::string& s, const std::string& where) {
    if (s.empty()) throw data_error("MalformedNumber", "empty amount in " + where);
    bool negative = s[0] == '-';
    std::size_t start = negative ? 1 : 0;
    std::int64_t units = 0;
    std::int64_t cents = 0;
    std::size_t i = start;
    for (; i < s.size() && s[i] != '.'; ++i) {
        if (s[i] < '0' || s[i] > '9') throw data_error("MalformedNumber", "bad amount '" + s + "' in " + where);
        units = units * 10 + (s[i] - '0');
    }
    if (i < s.size()) {  // fraction
        std::string frac = s.substr(i + 1);
        if (frac.empty() || frac.size() > 2)
            throw data_error("MalformedNumber", "amount '" + s + "' must have at most 2 decimals in " + where);
        for (char c : frac)
            if (c < '0' || c > '9') throw data_error("MalformedNumber", "bad amount '" + s + "' in " + where);
        cents = std::stoll(frac);
        if (frac.size() == 1) cents *= 10;
    }
    std::int64_t total = units * 100 + cents;
    return negative ? -total : total;
}

inline std::string format_amount(std::int64_t cents) {
    bool neg = cents < 0;
    std::int64_t a = neg ? -cents : cents;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%s%lld.%02lld", neg ? "-" : "", static_cast<long long>(a / 100),
                  static_cast<long long>(a % 100));
    return buf;
}

inline ResStatus parse_status(const std::string& s, const std::string& where) {
    if (s == "Historic") return ResStatus::Historic;
    if (s == "Cancelled") return ResStatus::Cancelled;
    if (s == "NoShow") return ResStatus::NoShow;
    throw data_error("MalformedStatus", "unknown reservation status '" + s + "' in " + where);
}

}  // namespace detail

// Assigns a Room/Ancillary/Other class to every folio line. Other lines
// stay in the dataset but are never counted as revenue.
inline void classify_transactions(std::vector<Folio>& folios, const TxnMap& txn_map) {
    for (auto& f : folios) {
        auto it = txn_map.find(f.transaction_code);
        if (it == txn_map.end())
            throw data_error("UnmappedTransactionCode",
                             "folio " + f.folio_id + " uses unmapped transaction code '" + f.transaction_code + "'");
        f.classification = it->second;
    }
}

// Report-only integrity pass; never mutates the dataset. An empty report
// means every structural invariant holds.
inline ValidationReport validate(const Dataset& ds) {
    ValidationReport report;
    std::unordered_map<std::string, int> seen_profiles;
    for (const auto& p : ds.profiles) {
        if (++seen_profiles[p.profile_id] == 2)
            report.entries.push_back({"DuplicateId", "profiles", p.profile_id, "profile_id appears more than once"});
    }
    for (const auto& r : ds.reservations) {
        if (!ds.profile_index.count(r.profile_id))
            report.entries.push_back({"DanglingForeignKey", "reservations", r.reservation_id,
                                      "references missing profile '" + r.profile_id + "'"});
        if (r.arrival_date - r.booking_date < 0)
            report.entries.push_back({"NegativeLeadTime", "reservations", r.reservation_id,
                                      "booking date after arrival date"});
        if (r.lead_time != static_cast<int>(r.arrival_date - r.booking_date))
            report.entries.push_back({"DerivedField", "reservations", r.reservation_id,
                                      "stored lead_time disagrees with dates"});
        if (r.length_of_stay != static_cast<int>(r.departure_date - r.arrival_date))
            report.entries.push_back({"DerivedField", "reservations", r.reservation_id,
                                      "stored length_of_stay disagrees with dates"});
        if (r.status == ResStatus::Historic && r.departure_date - r.arrival_date < 1)
            report.entries.push_back({"LengthOfStay", "reservations", r.reservation_id,
                                      "historic stay must span at least one night"});
        if (!ds.channel_map.empty() && !ds.channel_map.count(r.source_channel))
            report.entries.push_back({"UnmappedChannel", "reservations", r.reservation_id,
                                      "channel '" + r.source_channel + "' has no mapping"});
    }
    for (const auto& f : ds.folios) {
        if (!ds.reservation_index.count(f.reservation_id))
            report.entries.push_back({"DanglingForeignKey", "folios", f.folio_id,
                                      "references missing reservation '" + f.reservation_id + "'"});
    }
    return report;
}

// Loads the three source tables, populates derived fields, applies the
// channel and transaction classifications and verifies referential
// integrity. Throws the first hard error, naming the offending row.
inline Dataset ingest(const std::filesystem::path& profiles_csv, const std::filesystem::path& reservations_csv,
                      const std::filesystem::path& folios_csv, const ChannelMap& channel_map,
                      const TxnMap& txn_map) {
    Dataset ds;
    ds.channel_map = channel_map;

    {
        csv::Table t = csv::read_file(profiles_csv);
        const std::string file = "profiles.csv";
        int c_id = detail::require_column(t, "profile_id", file);
        int c_first = detail::require_column(t, "first_name", file);
        int c_last = detail::require_column(t, "last_name", file);
        int c_email = detail::require_column(t, "email", file);
        int c_phone = detail::require_column(t, "phone", file);
        int c_addr = detail::require_column(t, "address", file);
        int c_loyal = detail::require_column(t, "loyalty_level", file);
        int c_opt = detail::require_column(t, "marketing_opt_in", file);
        int c_created = detail::require_column(t, "created_at", file);
        ds.profiles.reserve(t.rows.size());
        for (const auto& row : t.rows) {
            Profile p;
            p.profile_id = detail::parse_field(row, c_id);
            p.first_name = detail::parse_field(row, c_first);
            p.last_name = detail::parse_field(row, c_last);
            p.email = detail::parse_field(row, c_email);
            p.phone = detail::parse_field(row, c_phone);
            p.address = detail::parse_field(row, c_addr);
            p.loyalty_level = detail::parse_field(row, c_loyal);
            const std::string where = file + " profile " + p.profile_id;
            p.marketing_opt_in = detail::parse_bool(detail::parse_field(row, c_opt), where);
            p.created_at = Date::parse_or_throw(detail::parse_field(row, c_created), where);
            ds.profiles.push_back(std::move(p));
        }
    }

    {
        csv::Table t = csv::read_file(reservations_csv);
        const std::string file = "reservations.csv";
        int c_id = detail::require_column(t, "reservation_id", file);
        int c_pid = detail::require_column(t, "profile_id", file);
        int c_status = detail::require_column(t, "status", file);
        int c_book = detail::require_column(t, "booking_date", file);
        int c_arr = detail::require_column(t, "arrival_date", file);
        int c_dep = detail::require_column(t, "departure_date", file);
        int c_chan = detail::require_column(t, "source_channel", file);
        int c_group = detail::require_column(t, "group_id", file);
        int c_comp = detail::require_column(t, "company_id", file);
        int c_agency = detail::require_column(t, "agency_id", file);
        ds.reservations.reserve(t.rows.size());
        for (const auto& row : t.rows) {
            Reservation r;
            r.reservation_id = detail::parse_field(row, c_id);
            r.profile_id = detail::parse_field(row, c_pid);
            const std::string where = file + " reservation " + r.reservation_id;
            r.status = detail::parse_status(detail::parse_field(row, c_status), where);
            r.booking_date = Date::parse_or_throw(detail::parse_field(row, c_book), where);
            r.arrival_date = Date::parse_or_throw(detail::parse_field(row, c_arr), where);
            r.departure_date = Date::parse_or_throw(detail::parse_field(row, c_dep), where);
            r.source_channel = detail::parse_field(row, c_chan);
            r.group_id = detail::parse_field(row, c_group);
            r.company_id = detail::parse_field(row, c_comp);
            r.agency_id = detail::parse_field(row, c_agency);
            r.lead_time = static_cast<int>(r.arrival_date - r.booking_date);
            r.length_of_stay = static_cast<int>(r.departure_date - r.arrival_date);
            if (r.lead_time < 0)
                throw data_error("NegativeLeadTime", where + " books after arrival (" +
                                                         r.booking_date.to_string() + " > " +
                                                         r.arrival_date.to_string() + ")");
            if (!channel_map.count(r.source_channel))
                throw data_error("UnmappedChannel",
                                 where + " uses channel '" + r.source_channel + "' with no mapping");
            ds.reservations.push_back(std::move(r));
        }
    }

    {
        csv::Table t = csv::read_file(folios_csv);
        const std::string file = "folios.csv";
        int c_id = detail::require_column(t, "folio_id", file);
        int c_rid = detail::require_column(t, "reservation_id", file);
        int c_code = detail::require_column(t, "transaction_code", file);
        int c_amount = detail::require_column(t, "amount", file);
        ds.folios.reserve(t.rows.size());
        for (const auto& row : t.rows) {
            Folio f;
            f.folio_id = detail::parse_field(row, c_id);
            f.reservation_id = detail::parse_field(row, c_rid);
            f.transaction_code = detail::parse_field(row, c_code);
            const std::string where = file + " folio " + f.folio_id;
            f.amount_cents = detail::parse_amount_cents(detail::parse_field(row, c_amount), where);
            ds.folios.push_back(std::move(f));
        }
    }

    classify_transactions(ds.folios, txn_map);
    ds.rebuild_indexes();

    for (const auto& p : ds.profiles) {
        if (ds.profile_index.at(p.profile_id) != static_cast<std::size_t>(&p - ds.profiles.data()))
            throw data_error("DuplicateId", "profile_id '" + p.profile_id + "' appears more than once");
    }
    for (const auto& r : ds.reservations) {
        if (!ds.profile_index.count(r.profile_id))
            throw data_error("DanglingForeignKey",
                             "reservation " + r.reservation_id + " references missing profile '" + r.profile_id + "'");
    }
    for (const auto& f : ds.folios) {
        if (!ds.reservation_index.count(f.reservation_id))
            throw data_error("DanglingForeignKey",
                             "folio " + f.folio_id + " references missing reservation '" + f.reservation_id + "'");
    }
    return ds;
}

// Canonical re-export: same schemas and field order as ingest expects, so
// a valid file round-trips byte-identically.
inline void export_csv(const Dataset& ds, const std::filesystem::path& dir) {
    {
        std::vector<std::vector<std::string>> rows;
        rows.reserve(ds.profiles.size());
        for (const auto& p : ds.profiles)
            rows.push_back({p.profile_id, p.first_name, p.last_name, p.email, p.phone, p.address, p.loyalty_level,
                            p.marketing_opt_in ? "true" : "false", p.created_at.to_string()});
        csv::write_file(dir / "profiles.csv",
                        {"profile_id", "first_name", "last_name", "email", "phone", "address", "loyalty_level",
                         "marketing_opt_in", "created_at"},
                        rows);
    }
    {
        std::vector<std::vector<std::string>> rows;
        rows.reserve(ds.reservations.size());
        for (const auto& r : ds.reservations)
            rows.push_back({r.reservation_id, r.profile_id, to_string(r.status), r.booking_date.to_string(),
                            r.arrival_date.to_string(), r.departure_date.to_string(), r.source_channel, r.group_id,
                            r.company_id, r.agency_id});
        csv::write_file(dir / "reservations.csv",
                        {"reservation_id", "profile_id", "status", "booking_date", "arrival_date", "departure_date",
                         "source_channel", "group_id", "company_id", "agency_id"},
                        rows);
    }
    {
        std::vector<std::vector<std::string>> rows;
        rows.reserve(ds.folios.size());
        for (const auto& f : ds.folios)
            rows.push_back({f.folio_id, f.reservation_id, f.transaction_code, detail::format_amount(f.amount_cents)});
        csv::write_file(dir / "folios.csv", {"folio_id", "reservation_id", "transaction_code", "amount"}, rows);
    }
}

// channel_map / txn_map come from config key-value sections.
inline ChannelMap channel_map_from_config(const std::map<std::string, std::string>& kv) {
    ChannelMap m;
    for (const auto& [name, cls] : kv) {
        if (cls == "Direct")
            m[name] = ChannelClass::Direct;
        else if (cls == "Indirect")
            m[name] = ChannelClass::Indirect;
        else
            throw config_error("MalformedConfig",
                               "channel '" + name + "' must map to Direct or Indirect, got '" + cls + "'");
    }
    return m;
}

inline TxnMap txn_map_from_config(const std::map<std::string, std::string>& kv) {
    TxnMap m;
    for (const auto& [code, cls] : kv) {
        if (cls == "Room")
            m[code] = TxnClass::Room;
        else if (cls == "Ancillary")
            m[code] = TxnClass::Ancillary;
        else if (cls == "Other")
            m[code] = TxnClass::Other;
        else
            throw config_error("MalformedConfig",
                               "transaction code '" + code + "' must map to Room, Ancillary or Other, got '" + cls + "'");
    }
    return m;
}

}  // namespace segforge
