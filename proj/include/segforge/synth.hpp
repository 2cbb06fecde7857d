#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "segforge/csv.hpp"
#include "segforge/date.hpp"
#include "segforge/errors.hpp"
#include "segforge/golden.hpp"
#include "segforge/pms.hpp"
#include "segforge/rng.hpp"

namespace segforge::synth {

// Behaviour template for one planted guest segment. All probabilities are
// per guest or per reservation as noted; weight vectors are categorical
// distributions starting at count 1 / night 1.
struct Archetype {
    std::string name;
    std::vector<double> reservation_count_weights;  // P(1 stay), P(2), ...
    double cancel_prob = 0.05;
    double noshow_prob = 0.02;
    double direct_prob = 0.5;        // per reservation
    double group_prob = 0.0;         // per reservation
    double company_prob = 0.0;
    double agency_prob = 0.0;
    std::vector<double> los_weights;                // P(1 night), P(2), ...
    double lead_short_prob = 0.0;    // lead in [0, 2]
    double lead_long_prob = 0.0;     // lead in [46, 180]; remainder [3, 45]
    double nightly_spend_lo = 100.0;
    double nightly_spend_hi = 150.0;
    double ancillary_share_lo = 0.1;
    double ancillary_share_hi = 0.3;
    double weekend_arrival_prob = 0.3;  // arrival snapped to Fri/Sat
    double loyalty_prob = 0.0;
    double opt_in_prob = 0.5;
    bool spread_over_range = false;  // stays across all years vs one year
};

struct GeneratorConfig {
    std::uint64_t seed = 1;
    std::size_t guest_count = 1000;       // distinct guests; duplicates add extra profile rows
    std::vector<double> archetype_weights;  // same order as the archetype set
    Date range_start = Date::from_ymd(2015, 1, 1);
    Date range_end = Date::from_ymd(2020, 1, 1);  // exclusive
    double duplicate_rate = 0.0;          // fraction of guests with a second profile row
};

// Four well-separated guest populations: agent-booked group travellers,
// direct weekend leisure guests, indirect bookers who mostly cancel, and
// high-spend repeat loyalists.
inline std::vector<Archetype> default_archetypes() {
    std::vector<Archetype> out(4);

    out[0].name = "group_tour";
    out[0].reservation_count_weights = {0.9, 0.1};
    out[0].cancel_prob = 0.04;
    out[0].direct_prob = 0.03;
    out[0].group_prob = 0.97;
    out[0].company_prob = 0.02;
    out[0].agency_prob = 0.95;
    out[0].los_weights = {0.0, 0.5, 0.5};  // 2-3 nights
    out[0].lead_short_prob = 0.0;
    out[0].lead_long_prob = 0.05;
    out[0].nightly_spend_lo = 105.0;
    out[0].nightly_spend_hi = 140.0;
    out[0].ancillary_share_lo = 0.05;
    out[0].ancillary_share_hi = 0.2;
    out[0].weekend_arrival_prob = 0.05;
    out[0].loyalty_prob = 0.002;
    out[0].opt_in_prob = 0.35;

    out[1].name = "direct_weekend";
    out[1].reservation_count_weights = {0.85, 0.15};
    out[1].cancel_prob = 0.05;
    out[1].direct_prob = 0.97;
    out[1].group_prob = 0.02;
    out[1].company_prob = 0.05;
    out[1].agency_prob = 0.03;
    out[1].los_weights = {0.55, 0.45};  // 1-2 nights
    out[1].lead_short_prob = 0.65;
    out[1].lead_long_prob = 0.02;
    out[1].nightly_spend_lo = 150.0;
    out[1].nightly_spend_hi = 210.0;
    out[1].ancillary_share_lo = 0.15;
    out[1].ancillary_share_hi = 0.35;
    out[1].weekend_arrival_prob = 0.92;
    out[1].loyalty_prob = 0.01;
    out[1].opt_in_prob = 0.6;

    out[2].name = "cancel_indirect";
    out[2].reservation_count_weights = {0.9, 0.1};
    out[2].cancel_prob = 0.9;
    out[2].noshow_prob = 0.03;
    out[2].direct_prob = 0.06;
    out[2].group_prob = 0.0;
    out[2].company_prob = 0.45;
    out[2].agency_prob = 0.35;
    out[2].los_weights = {0.85, 0.15};  // mostly single night
    out[2].lead_short_prob = 0.05;
    out[2].lead_long_prob = 0.55;
    out[2].nightly_spend_lo = 120.0;
    out[2].nightly_spend_hi = 170.0;
    out[2].weekend_arrival_prob = 0.25;
    out[2].loyalty_prob = 0.0;
    out[2].opt_in_prob = 0.4;

    out[3].name = "repeat_loyal";
    out[3].reservation_count_weights = {0.0, 0.0, 0.25, 0.3, 0.3, 0.15};  // 3-6 stays
    out[3].cancel_prob = 0.04;
    out[3].direct_prob = 0.7;
    out[3].group_prob = 0.05;
    out[3].company_prob = 0.5;
    out[3].agency_prob = 0.1;
    out[3].los_weights = {0.35, 0.45, 0.2};
    out[3].lead_short_prob = 0.15;
    out[3].lead_long_prob = 0.05;
    out[3].nightly_spend_lo = 220.0;
    out[3].nightly_spend_hi = 300.0;
    out[3].ancillary_share_lo = 0.3;
    out[3].ancillary_share_hi = 0.5;
    out[3].weekend_arrival_prob = 0.4;
    out[3].loyalty_prob = 0.3;
    out[3].opt_in_prob = 0.8;
    out[3].spread_over_range = true;

    return out;
}

inline ChannelMap default_channel_map() {
    return {{"Website", ChannelClass::Direct}, {"Phone", ChannelClass::Direct},
            {"WalkIn", ChannelClass::Direct},  {"OTA-A", ChannelClass::Indirect},
            {"OTA-B", ChannelClass::Indirect}, {"GDS", ChannelClass::Indirect}};
}

inline TxnMap default_txn_map() {
    return {{"ROOM", TxnClass::Room},
            {"FNB", TxnClass::Ancillary},
            {"SPA", TxnClass::Ancillary},
            {"CITYTAX", TxnClass::Other},
            {"TIP", TxnClass::Other}};
}

struct GroundTruthRow {
    std::string profile_id;
    std::string archetype;
    std::string dup_group;
};

struct GeneratedData {
    std::vector<Profile> profiles;
    std::vector<Reservation> reservations;
    std::vector<Folio> folios;
    std::vector<GroundTruthRow> ground_truth;
};

namespace detail {

// First-name pairs that share a phonetic key, for duplicate injection.
inline const std::vector<std::pair<const char*, const char*>>& name_variants() {
    static const std::vector<std::pair<const char*, const char*>> v = {
        {"Jon", "John"}, {"Ann", "Anne"}, {"Steven", "Stephen"}, {"Mark", "Marc"},
        {"Erik", "Eric"}, {"Sara", "Sarah"}, {"Brian", "Bryan"}, {"Carl", "Karl"}};
    return v;
}

inline const std::vector<const char*>& first_names() {
    static const std::vector<const char*> v = {
        "Alice", "Bram",  "Carmen", "Derek", "Eva",   "Femke", "Georg", "Hana",  "Ivan",  "Julia",
        "Kees",  "Lotte", "Marco",  "Nora",  "Oscar", "Petra", "Quinn", "Rosa",  "Sven",  "Tessa",
        "Umar",  "Vera",  "Wouter", "Xenia", "Yusuf", "Zoe",   "Pieter", "Sanne", "Tim",   "Lara"};
    return v;
}

inline const std::vector<const char*>& last_names() {
    static const std::vector<const char*> v = {
        "Jansen",   "deVries",  "vanDam",  "Bakker", "Visser",  "Smit",   "Meijer", "Mulder",
        "Bos",      "Vos",      "Peters",  "Hendriks", "Dekker", "Brouwer", "Dijkstra", "Smeets",
        "Koster",   "vanLeeuwen", "Driessen", "Kuipers", "Maas",  "Verhoeven", "Koning", "Prins",
        "Huisman",  "Peeters",  "Kok",     "Jacobs", "Vermeulen", "Schouten"};
    return v;
}

inline std::string pad_id(const char* prefix, std::size_t n, int width = 7) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, n);
    return buf;
}

}  // namespace detail

inline void check_config(const GeneratorConfig& config, std::size_t archetype_count) {
    if (config.guest_count == 0) throw config_error("InvalidConfig", "guest count must be positive");
    if (config.duplicate_rate < 0.0 || config.duplicate_rate > 0.2)
        throw config_error("InvalidConfig", "duplicate rate must be within [0, 0.2]");
    if (!(config.range_start < config.range_end))
        throw config_error("InvalidConfig", "date range start must precede end");
    if (config.archetype_weights.size() != archetype_count)
        throw config_error("InvalidConfig", "archetype weights must match the archetype set");
    double sum = 0.0;
    for (double w : config.archetype_weights) {
        if (w < 0.0) throw config_error("InvalidConfig", "archetype weights must be non-negative");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw config_error("InvalidConfig", "archetype weights must sum to 1");
}

// Deterministic under the seed: every guest draws from an independent
// substream keyed by guest index, so growing the population leaves
// existing guests untouched.
inline GeneratedData generate(const GeneratorConfig& config,
                              const std::vector<Archetype>& archetypes = default_archetypes()) {
    check_config(config, archetypes.size());
    GeneratedData data;

    const std::int64_t range_days = config.range_end - config.range_start;
    std::size_t reservation_counter = 0;
    std::size_t folio_counter = 0;

    for (std::size_t guest = 0; guest < config.guest_count; ++guest) {
        Rng rng(mix_seed(config.seed, guest));
        const Archetype& kind = archetypes[rng.pick_weighted(config.archetype_weights)];

        bool duplicated = rng.chance(config.duplicate_rate);
        // Duplicate mechanics: shared email with different case, or a
        // phonetic first-name variant plus the same phone number.
        bool dup_by_email = rng.chance(0.7);

        std::string first = detail::first_names()[rng.below(detail::first_names().size())];
        std::string first_b = first;
        if (duplicated && !dup_by_email) {
            const auto& variants = detail::name_variants();
            auto pair = variants[rng.below(variants.size())];
            first = pair.first;
            first_b = pair.second;
        }
        std::string last = detail::last_names()[rng.below(detail::last_names().size())];
        std::string email = normalize_email(first) + "." + normalize_email(last) + "." + std::to_string(guest) +
                            "@example.com";
        std::string email_b = email;
        if (duplicated && dup_by_email) {
            email_b = email;
            email_b[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(email_b[0])));
        } else if (duplicated) {
            email_b = "alt." + email;  // different email, match must come from name+phone
        }
        char phone[24];
        std::snprintf(phone, sizeof(phone), "+31 6 %08zu", guest);
        char phone_b[24];
        std::snprintf(phone_b, sizeof(phone_b), "+31-6-%08zu", guest);  // same digits, other format
        std::string address = std::to_string(1 + guest % 200) + " " +
                              detail::last_names()[(guest * 13) % detail::last_names().size()] + " Street";

        std::string id_a = detail::pad_id("P", guest * 2);
        std::string id_b = detail::pad_id("P", guest * 2 + 1);

        // Reservation schedule.
        std::size_t n_res = 1 + rng.pick_weighted(kind.reservation_count_weights);
        std::int64_t home_offset = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(range_days)));

        struct PlannedRes {
            Reservation r;
            double room_spend = 0.0;
            double ancillary_spend = 0.0;
        };
        std::vector<PlannedRes> planned;

        for (std::size_t s = 0; s < n_res; ++s) {
            PlannedRes p;
            Reservation& r = p.r;
            r.reservation_id = detail::pad_id("R", reservation_counter++);

            double status_draw = rng.u01();
            r.status = status_draw < kind.cancel_prob
                           ? ResStatus::Cancelled
                           : (status_draw < kind.cancel_prob + kind.noshow_prob ? ResStatus::NoShow
                                                                                : ResStatus::Historic);

            std::int64_t day;
            if (kind.spread_over_range) {
                day = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(range_days)));
            } else {
                // cluster around the guest's home period, +- 60 days
                day = home_offset + rng.range(-60, 60);
            }
            Date arrival = config.range_start.add_days(std::clamp<std::int64_t>(day, 0, range_days - 1));
            if (rng.chance(kind.weekend_arrival_prob)) {
                while (arrival.weekday() != 4 && arrival.weekday() != 5) arrival = arrival.add_days(1);
            } else if (arrival.weekday() >= 4) {
                arrival = arrival.add_days(7 - arrival.weekday());  // push to Monday
            }
            int los = 1 + static_cast<int>(rng.pick_weighted(kind.los_weights));
            if (arrival.weekday() == 5) los = 1;  // Saturday arrivals stay one night
            r.arrival_date = arrival;
            r.departure_date = arrival.add_days(los);

            double lead_draw = rng.u01();
            int lead;
            if (lead_draw < kind.lead_short_prob)
                lead = static_cast<int>(rng.below(3));
            else if (lead_draw < kind.lead_short_prob + kind.lead_long_prob)
                lead = 46 + static_cast<int>(rng.below(135));
            else
                lead = 3 + static_cast<int>(rng.below(43));
            r.booking_date = arrival.add_days(-lead);
            r.lead_time = lead;
            r.length_of_stay = los;

            bool direct = rng.chance(kind.direct_prob);
            const char* direct_channels[] = {"Website", "Phone", "WalkIn"};
            const char* indirect_channels[] = {"OTA-A", "OTA-B", "GDS"};
            r.source_channel = direct ? direct_channels[rng.below(3)] : indirect_channels[rng.below(3)];
            if (rng.chance(kind.group_prob)) r.group_id = "G" + std::to_string(1 + rng.below(40));
            if (rng.chance(kind.company_prob)) r.company_id = "C" + std::to_string(1 + rng.below(60));
            if (rng.chance(kind.agency_prob)) r.agency_id = "A" + std::to_string(1 + rng.below(25));

            if (r.status == ResStatus::Historic) {
                double nightly = kind.nightly_spend_lo + rng.u01() * (kind.nightly_spend_hi - kind.nightly_spend_lo);
                p.room_spend = nightly * los;
                double share = kind.ancillary_share_lo +
                               rng.u01() * (kind.ancillary_share_hi - kind.ancillary_share_lo);
                p.ancillary_spend = p.room_spend * share;
            }
            planned.push_back(std::move(p));
        }

        std::sort(planned.begin(), planned.end(),
                  [](const PlannedRes& a, const PlannedRes& b) { return a.r.arrival_date < b.r.arrival_date; });

        bool loyalty = rng.chance(kind.loyalty_prob);
        bool opt_in = rng.chance(kind.opt_in_prob);

        Profile pa;
        pa.profile_id = id_a;
        pa.first_name = first;
        pa.last_name = last;
        pa.email = email;
        pa.phone = phone;
        pa.address = address;
        pa.loyalty_level = loyalty ? "Gold" : "";
        pa.marketing_opt_in = opt_in;
        pa.created_at = planned.front().r.booking_date;

        Profile pb;
        if (duplicated) {
            pb.profile_id = id_b;
            pb.first_name = first_b;
            pb.last_name = last;
            pb.email = email_b;
            pb.phone = phone_b;
            pb.address = dup_by_email ? "" : address;
            pb.loyalty_level = "";
            pb.marketing_opt_in = false;
            pb.created_at = planned.front().r.booking_date.add_days(30);
        }

        // Attach reservations; a duplicated guest splits stays between rows
        // (the first stay always stays with the primary row).
        for (std::size_t s = 0; s < planned.size(); ++s) {
            PlannedRes& p = planned[s];
            bool to_b = duplicated && s > 0 && rng.chance(0.5);
            p.r.profile_id = to_b ? id_b : id_a;
            if (p.room_spend > 0.0) {
                Folio room;
                room.folio_id = detail::pad_id("F", folio_counter++);
                room.reservation_id = p.r.reservation_id;
                room.transaction_code = "ROOM";
                room.amount_cents = static_cast<std::int64_t>(std::floor(p.room_spend * 100.0 + 0.5));
                room.classification = TxnClass::Room;
                data.folios.push_back(std::move(room));
                if (p.ancillary_spend > 0.005) {
                    Folio anc;
                    anc.folio_id = detail::pad_id("F", folio_counter++);
                    anc.reservation_id = p.r.reservation_id;
                    anc.transaction_code = rng.chance(0.5) ? "FNB" : "SPA";
                    anc.amount_cents = static_cast<std::int64_t>(std::floor(p.ancillary_spend * 100.0 + 0.5));
                    anc.classification = TxnClass::Ancillary;
                    data.folios.push_back(std::move(anc));
                }
                Folio tax;
                tax.folio_id = detail::pad_id("F", folio_counter++);
                tax.reservation_id = p.r.reservation_id;
                tax.transaction_code = "CITYTAX";
                tax.amount_cents = static_cast<std::int64_t>(std::floor(p.room_spend * 5.0 + 0.5));  // 5%
                tax.classification = TxnClass::Other;
                data.folios.push_back(std::move(tax));
            }
            data.reservations.push_back(std::move(p.r));
        }

        data.profiles.push_back(std::move(pa));
        data.ground_truth.push_back({id_a, kind.name, detail::pad_id("D", guest)});
        if (duplicated) {
            data.profiles.push_back(std::move(pb));
            data.ground_truth.push_back({id_b, kind.name, detail::pad_id("D", guest)});
        }
    }
    return data;
}

inline void write_ground_truth(const std::filesystem::path& path, const std::vector<GroundTruthRow>& rows) {
    std::vector<std::vector<std::string>> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back({r.profile_id, r.archetype, r.dup_group});
    csv::write_file(path, {"profile_id", "archetype", "dup_group"}, out);
}

inline std::map<std::string, std::string> read_ground_truth_archetypes(const std::filesystem::path& path) {
    csv::Table t = csv::read_file(path);
    std::map<std::string, std::string> out;
    int c_pid = t.column("profile_id");
    int c_arch = t.column("archetype");
    for (const auto& row : t.rows)
        out[row[static_cast<std::size_t>(c_pid)]] = row[static_cast<std::size_t>(c_arch)];
    return out;
}

// Writes profiles.csv / reservations.csv / folios.csv / ground_truth.csv.
inline GeneratedData generate_files(const GeneratorConfig& config, const std::filesystem::path& dir,
                                    const std::vector<Archetype>& archetypes = default_archetypes()) {
    GeneratedData data = generate(config, archetypes);
    Dataset ds;
    ds.profiles = data.profiles;
    ds.reservations = data.reservations;
    ds.folios = data.folios;
    export_csv(ds, dir);
    write_ground_truth(dir / "ground_truth.csv", data.ground_truth);
    return data;
}

}  // namespace segforge::synth
