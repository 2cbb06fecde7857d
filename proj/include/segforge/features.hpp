#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "segforge/csv.hpp"
#include "segforge/date.hpp"
#include "segforge/errors.hpp"
#include "segforge/golden.hpp"
#include "segforge/pms.hpp"

namespace segforge {

// Feature kind decides both the dissimilarity term (binary mismatch vs
// range-scaled difference) and which data-prep rule applies:
//   Count      -> capped at the population 95% nearest-rank quantile
//   Percentage -> snapped to the 0.2 grid (six distinct values)
//   Revenue    -> rounded to the nearest 100, capped at the 99% quantile
//   Binary     -> untouched
enum class FeatureKind { Count, Percentage, Revenue, Binary };

struct FeatureDef {
    const char* name;
    FeatureKind kind;
};

inline constexpr std::size_t kFeatureCount = 25;

inline constexpr std::array<FeatureDef, kFeatureCount> kFeatureSchema = {{
    {"ReservationsTotal", FeatureKind::Count},
    {"ReservationsHistoric", FeatureKind::Percentage},
    {"ReservationsCancelled", FeatureKind::Percentage},
    {"ReservationsCompany", FeatureKind::Percentage},
    {"ReservationsAgency", FeatureKind::Percentage},
    {"ReservationsGroup", FeatureKind::Percentage},
    {"ReservationsSourceDirect", FeatureKind::Percentage},
    {"ReservationsSourceIndirect", FeatureKind::Percentage},
    {"RevenueTotal", FeatureKind::Revenue},
    {"RevenueAverage", FeatureKind::Revenue},
    {"RevenueTotalRoom", FeatureKind::Revenue},
    {"RevenueTotalAncillary", FeatureKind::Revenue},
    {"RepeatBinary", FeatureKind::Binary},
    {"RepeatTotal", FeatureKind::Count},
    {"RepeatFrequencyMediumBinary", FeatureKind::Binary},
    {"RepeatLast365Binary", FeatureKind::Binary},
    {"WeekStay", FeatureKind::Percentage},
    {"WeekendStay", FeatureKind::Percentage},
    {"LOSAverage", FeatureKind::Count},
    {"SingleNightBinary", FeatureKind::Binary},
    {"ShortStayBinary", FeatureKind::Binary},
    {"MediumStayBinary", FeatureKind::Binary},
    {"LastMinuteBookerBinary", FeatureKind::Binary},
    {"EarlyBirdBookerBinary", FeatureKind::Binary},
    {"LoyaltyBinary", FeatureKind::Binary},
}};

// Column indexes, for readable code elsewhere.
enum Feature : std::size_t {
    F_ReservationsTotal = 0,
    F_ReservationsHistoric,
    F_ReservationsCancelled,
    F_ReservationsCompany,
    F_ReservationsAgency,
    F_ReservationsGroup,
    F_ReservationsSourceDirect,
    F_ReservationsSourceIndirect,
    F_RevenueTotal,
    F_RevenueAverage,
    F_RevenueTotalRoom,
    F_RevenueTotalAncillary,
    F_RepeatBinary,
    F_RepeatTotal,
    F_RepeatFrequencyMediumBinary,
    F_RepeatLast365Binary,
    F_WeekStay,
    F_WeekendStay,
    F_LOSAverage,
    F_SingleNightBinary,
    F_ShortStayBinary,
    F_MediumStayBinary,
    F_LastMinuteBookerBinary,
    F_EarlyBirdBookerBinary,
    F_LoyaltyBinary,
};

struct FeatureVector {
    std::string golden_id;
    std::array<double, kFeatureCount> values{};
};

// Stay/booker flags from per-profile aggregates. Thresholds: room-night
// stay at exactly one night, short up to three, long above; last-minute
// below 3 days of lead, early-bird above 45; medium repeat frequency
// above one repeat stay.
struct BusinessFlags {
    bool single_night = false;
    bool short_stay = false;
    bool long_stay = false;
    bool last_minute = false;
    bool early_bird = false;
    bool repeat_frequency_medium = false;
    bool loyalty_member = false;
};

inline BusinessFlags apply_business_logic(double los_average, double lead_average, double repeat_total,
                                          bool has_loyalty_level) {
    BusinessFlags flags;
    flags.single_night = los_average == 1.0;
    flags.short_stay = los_average > 1.0 && los_average <= 3.0;
    flags.long_stay = los_average > 3.0;
    flags.last_minute = lead_average < 3.0;
    flags.early_bird = lead_average > 45.0;
    flags.repeat_frequency_medium = repeat_total > 1.0;
    flags.loyalty_member = has_loyalty_level;
    return flags;
}

// One feature vector per golden profile with at least one reservation
// whose arrival date falls strictly before as_of; every aggregate uses
// only those reservations. Profiles absent from golden_map count as their
// own golden profile.
inline std::vector<FeatureVector> build_features(const Dataset& ds, const GoldenMap& golden_map, Date as_of) {
    struct Aggregate {
        int total = 0, historic = 0, cancelled = 0;
        int company = 0, agency = 0, group = 0, direct = 0, indirect = 0;
        int week = 0, weekend = 0;
        long long los_sum = 0, lead_sum = 0;
        std::int64_t revenue_room_cents = 0, revenue_ancillary_cents = 0;
        bool arrival_last_365 = false;
        bool loyalty = false;
    };

    auto golden_of = [&](const std::string& profile_id) -> const std::string& {
        auto it = golden_map.find(profile_id);
        return it == golden_map.end() ? profile_id : it->second;
    };

    std::map<std::string, Aggregate> agg;  // golden_id -> aggregate, ordered for determinism

    // Loyalty propagates from any member profile of the golden profile.
    for (const auto& p : ds.profiles)
        if (!p.loyalty_level.empty()) agg[golden_of(p.profile_id)].loyalty = true;
    // Drop goldens with no qualifying reservation later; remember loyalty-only entries.
    std::unordered_map<std::string, std::int64_t> revenue_by_reservation_room;
    std::unordered_map<std::string, std::int64_t> revenue_by_reservation_anc;
    for (const auto& f : ds.folios) {
        if (f.classification == TxnClass::Room)
            revenue_by_reservation_room[f.reservation_id] += f.amount_cents;
        else if (f.classification == TxnClass::Ancillary)
            revenue_by_reservation_anc[f.reservation_id] += f.amount_cents;
        // Other is not revenue.
    }

    for (const auto& r : ds.reservations) {
        if (!(r.arrival_date < as_of)) continue;
        Aggregate& a = agg[golden_of(r.profile_id)];
        a.total += 1;
        if (r.status == ResStatus::Historic) a.historic += 1;
        if (r.status == ResStatus::Cancelled) a.cancelled += 1;
        if (!r.company_id.empty()) a.company += 1;
        if (!r.agency_id.empty()) a.agency += 1;
        if (!r.group_id.empty()) a.group += 1;
        if (ds.channel_class(r.source_channel) == ChannelClass::Direct)
            a.direct += 1;
        else
            a.indirect += 1;
        int arr_dow = r.arrival_date.weekday();   // 0 = Monday
        int dep_dow = r.departure_date.weekday();
        bool arr_week = arr_dow <= 4, dep_week = dep_dow <= 4;
        bool arr_wend = arr_dow >= 4, dep_wend = dep_dow >= 4;  // Fri, Sat, Sun
        if (r.length_of_stay < 5 && arr_week && dep_week) a.week += 1;
        if (r.length_of_stay < 3 && arr_wend && dep_wend) a.weekend += 1;
        a.los_sum += r.length_of_stay;
        a.lead_sum += r.lead_time;
        if (r.arrival_date >= as_of.add_days(-365)) a.arrival_last_365 = true;
        auto room = revenue_by_reservation_room.find(r.reservation_id);
        if (room != revenue_by_reservation_room.end()) a.revenue_room_cents += room->second;
        auto anc = revenue_by_reservation_anc.find(r.reservation_id);
        if (anc != revenue_by_reservation_anc.end()) a.revenue_ancillary_cents += anc->second;
    }

    std::vector<FeatureVector> out;
    out.reserve(agg.size());
    for (const auto& [golden_id, a] : agg) {
        if (a.total == 0) continue;  // loyalty-only entry without qualifying reservations
        FeatureVector v;
        v.golden_id = golden_id;
        double total = static_cast<double>(a.total);
        double revenue_room = static_cast<double>(a.revenue_room_cents) / 100.0;
        double revenue_anc = static_cast<double>(a.revenue_ancillary_cents) / 100.0;
        double revenue_total = revenue_room + revenue_anc;
        double los_avg = static_cast<double>(a.los_sum) / total;
        double lead_avg = static_cast<double>(a.lead_sum) / total;
        double repeat_total = total - 1.0;
        BusinessFlags flags = apply_business_logic(los_avg, lead_avg, repeat_total, a.loyalty);

        auto& f = v.values;
        f[F_ReservationsTotal] = total;
        f[F_ReservationsHistoric] = a.historic / total;
        f[F_ReservationsCancelled] = a.cancelled / total;
        f[F_ReservationsCompany] = a.company / total;
        f[F_ReservationsAgency] = a.agency / total;
        f[F_ReservationsGroup] = a.group / total;
        f[F_ReservationsSourceDirect] = a.direct / total;
        f[F_ReservationsSourceIndirect] = a.indirect / total;
        f[F_RevenueTotal] = revenue_total;
        f[F_RevenueAverage] = revenue_total / total;
        f[F_RevenueTotalRoom] = revenue_room;
        f[F_RevenueTotalAncillary] = revenue_anc;
        f[F_RepeatBinary] = a.total > 1 ? 1.0 : 0.0;
        f[F_RepeatTotal] = repeat_total;
        f[F_RepeatFrequencyMediumBinary] = flags.repeat_frequency_medium ? 1.0 : 0.0;
        f[F_RepeatLast365Binary] = a.arrival_last_365 ? 1.0 : 0.0;
        f[F_WeekStay] = a.week / total;
        f[F_WeekendStay] = a.weekend / total;
        f[F_LOSAverage] = los_avg;
        f[F_SingleNightBinary] = flags.single_night ? 1.0 : 0.0;
        f[F_ShortStayBinary] = flags.short_stay ? 1.0 : 0.0;
        f[F_MediumStayBinary] = flags.long_stay ? 1.0 : 0.0;
        f[F_LastMinuteBookerBinary] = flags.last_minute ? 1.0 : 0.0;
        f[F_EarlyBirdBookerBinary] = flags.early_bird ? 1.0 : 0.0;
        f[F_LoyaltyBinary] = a.loyalty ? 1.0 : 0.0;
        out.push_back(std::move(v));
    }
    if (out.empty()) throw data_error("EmptyCohort", "no profile has a reservation before " + as_of.to_string());
    return out;
}

// --- dimensionality reduction ----------------------------------------------

// Per-feature caps recorded at training time so later snapshots can be
// reduced in the exact same space. NaN = no cap for that feature.
struct ReductionCaps {
    std::array<double, kFeatureCount> cap;
    ReductionCaps() { cap.fill(std::numeric_limits<double>::quiet_NaN()); }
};

// Nearest-rank quantile: value at 1-based rank ceil(p*n) of the sorted
// population.
inline double nearest_rank_quantile(std::vector<double> values, double p) {
    if (values.empty()) throw data_error("EmptyPopulation", "quantile of an empty population");
    std::sort(values.begin(), values.end());
    std::size_t rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size())));
    if (rank == 0) rank = 1;
    if (rank > values.size()) rank = values.size();
    return values[rank - 1];
}

namespace detail {

// Snap to the 0.2 grid, rounding halves up (0.5 -> 0.6). Multiplying by 5
// keeps the half points exactly representable.
inline double snap_percentage(double v) {
    return std::floor(v * 5.0 + 0.5) / 5.0;
}

// Nearest multiple of 100, halves up.
inline double round_to_100(double v) {
    return std::floor(v / 100.0 + 0.5) * 100.0;
}

}  // namespace detail

// Applies previously computed caps; used both for fresh reductions and for
// replaying the training-time space at earlier evaluation dates. Every
// resulting value is quantized to the 3-decimal serialization precision so
// in-memory pipelines and file round-trips agree bit for bit.
inline void apply_reduction(std::vector<FeatureVector>& vectors, const ReductionCaps& caps) {
    for (auto& v : vectors) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            double x = v.values[f];
            switch (kFeatureSchema[f].kind) {
                case FeatureKind::Percentage:
                    x = detail::snap_percentage(x);
                    break;
                case FeatureKind::Count:
                    if (!std::isnan(caps.cap[f])) x = std::min(x, caps.cap[f]);
                    break;
                case FeatureKind::Revenue:
                    if (!std::isnan(caps.cap[f])) x = std::min(x, caps.cap[f]);
                    x = detail::round_to_100(x);
                    break;
                case FeatureKind::Binary:
                    break;
            }
            v.values[f] = csv::quantize3(x);
        }
    }
}

// Computes the population caps (95% quantile for counts, 99% for revenue)
// and transforms the vectors in place. Returns the caps for reuse.
inline ReductionCaps reduce_dimensionality(std::vector<FeatureVector>& vectors) {
    if (vectors.size() < 2)
        throw data_error("EmptyPopulation", "dimensionality reduction needs at least two vectors");
    ReductionCaps caps;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        FeatureKind kind = kFeatureSchema[f].kind;
        if (kind != FeatureKind::Count && kind != FeatureKind::Revenue) continue;
        std::vector<double> column;
        column.reserve(vectors.size());
        for (const auto& v : vectors) column.push_back(v.values[f]);
        caps.cap[f] = nearest_rank_quantile(std::move(column), kind == FeatureKind::Count ? 0.95 : 0.99);
    }
    apply_reduction(vectors, caps);
    return caps;
}

// --- feature file formats ---------------------------------------------------

inline void write_features_csv(const std::filesystem::path& path, const std::vector<FeatureVector>& vectors) {
    std::vector<std::string> header;
    header.push_back("golden_id");
    for (const auto& def : kFeatureSchema) header.push_back(def.name);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(vectors.size());
    for (const auto& v : vectors) {
        std::vector<std::string> row;
        row.reserve(kFeatureCount + 1);
        row.push_back(v.golden_id);
        for (double x : v.values) row.push_back(csv::format_number(x));
        rows.push_back(std::move(row));
    }
    csv::write_file(path, header, rows);
}

inline std::vector<FeatureVector> read_features_csv(const std::filesystem::path& path) {
    csv::Table t = csv::read_file(path);
    int c_id = detail::require_column(t, "golden_id", path.filename().string());
    std::array<int, kFeatureCount> cols{};
    for (std::size_t f = 0; f < kFeatureCount; ++f)
        cols[f] = detail::require_column(t, kFeatureSchema[f].name, path.filename().string());
    std::vector<FeatureVector> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        FeatureVector v;
        v.golden_id = row[static_cast<std::size_t>(c_id)];
        for (std::size_t f = 0; f < kFeatureCount; ++f)
            v.values[f] = csv::parse_double(row[static_cast<std::size_t>(cols[f])], path.filename().string());
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace segforge
