#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "segforge/csv.hpp"
#include "segforge/date.hpp"
#include "segforge/errors.hpp"
#include "segforge/features.hpp"
#include "segforge/golden.hpp"
#include "segforge/model.hpp"
#include "segforge/pms.hpp"

namespace segforge {

// Descriptive statistics over the raw dataset. Share triples are derived
// so they add up to 100 exactly (the last component is the remainder).
struct EdaReport {
    std::int64_t profile_count = 0;
    std::int64_t reservation_count = 0;
    std::int64_t folio_count = 0;

    double stay_pct_reservations = 0.0, cancelled_pct_reservations = 0.0, noshow_pct_reservations = 0.0;
    double stay_pct_room_nights = 0.0, cancelled_pct_room_nights = 0.0, noshow_pct_room_nights = 0.0;
    double revenue_room_pct = 0.0, revenue_ancillary_pct = 0.0;

    double repeat_profile_pct = 0.0;  // profiles with more than one Historic stay
    double opt_in_pct = 0.0;

    struct RepeatPoint {
        std::string month;  // YYYY-MM
        double all_time_pct = 0.0;
        double trailing_365_pct = 0.0;
    };
    std::vector<RepeatPoint> repeat_series;  // first 365 days dropped as warm-up

    struct RetentionCell {
        bool group = false, company = false, agency = false;
        std::int64_t profiles = 0;
        double retention_pct = 0.0;
    };
    std::vector<RetentionCell> retention;  // 8 cells + stored overall separately
    double retention_overall_pct = 0.0;
    std::int64_t retention_profiles = 0;

    struct StayMixYear {
        int year = 0;
        double week_pct = 0.0, weekend_pct = 0.0, other_pct = 0.0;
    };
    std::vector<StayMixYear> stay_mix_by_year;  // Historic reservations only

    double lead_time_mean = 0.0;
    double lead_over_45_pct = 0.0, lead_under_3_pct = 0.0;
    std::vector<std::int64_t> lead_histogram_weekly;  // bucket i = leads [7i, 7i+7)

    double direct_pct_reservations = 0.0, indirect_pct_reservations = 0.0;
    double profiles_direct_only_pct = 0.0, profiles_indirect_only_pct = 0.0, profiles_both_pct = 0.0;

    std::map<int, std::int64_t> new_profiles_per_year;  // by created_at
};

namespace detail {

inline std::string year_month(Date d) {
    int y, m, day;
    d.to_ymd(y, m, day);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", y, m);
    return buf;
}

}  // namespace detail

// Week / weekend / other classification of a single reservation, using
// the same day-of-week criteria as the stay-mix features.
inline const char* stay_class(const Reservation& r) {
    int arr = r.arrival_date.weekday();
    int dep = r.departure_date.weekday();
    if (r.length_of_stay < 5 && arr <= 4 && dep <= 4) return "week";
    if (r.length_of_stay < 3 && arr >= 4 && dep >= 4) return "weekend";
    return "other";
}

inline EdaReport eda_report(const Dataset& ds) {
    EdaReport report;
    report.profile_count = static_cast<std::int64_t>(ds.profiles.size());
    report.reservation_count = static_cast<std::int64_t>(ds.reservations.size());
    report.folio_count = static_cast<std::int64_t>(ds.folios.size());

    // status mix, by reservation and by room night
    std::int64_t stay = 0, cancelled = 0, noshow = 0;
    std::int64_t stay_nights = 0, cancelled_nights = 0, noshow_nights = 0;
    for (const auto& r : ds.reservations) {
        std::int64_t nights = std::max(0, r.length_of_stay);
        switch (r.status) {
            case ResStatus::Historic: stay += 1; stay_nights += nights; break;
            case ResStatus::Cancelled: cancelled += 1; cancelled_nights += nights; break;
            case ResStatus::NoShow: noshow += 1; noshow_nights += nights; break;
        }
    }
    auto mix = [](std::int64_t a, std::int64_t b, std::int64_t total, double& pa, double& pb, double& rest) {
        if (total == 0) return;
        pa = 100.0 * static_cast<double>(a) / static_cast<double>(total);
        pb = 100.0 * static_cast<double>(b) / static_cast<double>(total);
        rest = 100.0 - pa - pb;
    };
    mix(stay, cancelled, stay + cancelled + noshow, report.stay_pct_reservations, report.cancelled_pct_reservations,
        report.noshow_pct_reservations);
    mix(stay_nights, cancelled_nights, stay_nights + cancelled_nights + noshow_nights,
        report.stay_pct_room_nights, report.cancelled_pct_room_nights, report.noshow_pct_room_nights);

    // revenue split (Other is not revenue)
    std::int64_t room_cents = 0, ancillary_cents = 0;
    for (const auto& f : ds.folios) {
        if (f.classification == TxnClass::Room) room_cents += f.amount_cents;
        if (f.classification == TxnClass::Ancillary) ancillary_cents += f.amount_cents;
    }
    if (room_cents + ancillary_cents > 0) {
        report.revenue_room_pct =
            100.0 * static_cast<double>(room_cents) / static_cast<double>(room_cents + ancillary_cents);
        report.revenue_ancillary_pct = 100.0 - report.revenue_room_pct;
    }

    // per-profile reservation groupings
    std::unordered_map<std::string, std::vector<const Reservation*>> by_profile;
    for (const auto& r : ds.reservations) by_profile[r.profile_id].push_back(&r);

    std::int64_t repeat_profiles = 0, opt_in = 0;
    std::int64_t direct_only = 0, indirect_only = 0, both = 0;
    for (const auto& p : ds.profiles) {
        if (p.marketing_opt_in) opt_in += 1;
        report.new_profiles_per_year[p.created_at.year()] += 1;
        auto it = by_profile.find(p.profile_id);
        if (it == by_profile.end()) continue;
        int historic = 0;
        bool has_direct = false, has_indirect = false;
        for (const Reservation* r : it->second) {
            if (r->status == ResStatus::Historic) ++historic;
            if (ds.channel_map.count(r->source_channel)) {
                if (ds.channel_class(r->source_channel) == ChannelClass::Direct)
                    has_direct = true;
                else
                    has_indirect = true;
            }
        }
        if (historic > 1) repeat_profiles += 1;
        if (has_direct && has_indirect)
            both += 1;
        else if (has_direct)
            direct_only += 1;
        else if (has_indirect)
            indirect_only += 1;
    }
    if (!ds.profiles.empty()) {
        double n = static_cast<double>(ds.profiles.size());
        report.repeat_profile_pct = 100.0 * static_cast<double>(repeat_profiles) / n;
        report.opt_in_pct = 100.0 * static_cast<double>(opt_in) / n;
        report.profiles_direct_only_pct = 100.0 * static_cast<double>(direct_only) / n;
        report.profiles_indirect_only_pct = 100.0 * static_cast<double>(indirect_only) / n;
        report.profiles_both_pct = 100.0 * static_cast<double>(both) / n;
    }

    // repeat percentage series per arrival month over Historic stays:
    // share of that month's staying profiles with an earlier Historic
    // arrival (all time / within the preceding 365 days). The first 365
    // days of data are a warm-up and are dropped from the series.
    {
        std::unordered_map<std::string, std::vector<Date>> historic_arrivals;
        std::optional<Date> min_arrival;
        for (const auto& r : ds.reservations) {
            if (r.status != ResStatus::Historic) continue;
            historic_arrivals[r.profile_id].push_back(r.arrival_date);
            if (!min_arrival || r.arrival_date < *min_arrival) min_arrival = r.arrival_date;
        }
        std::map<std::string, std::map<std::string, Date>> month_first_arrival;  // month -> profile -> first arrival
        for (auto& [pid, arrivals] : historic_arrivals) {
            std::sort(arrivals.begin(), arrivals.end());
            for (Date a : arrivals) {
                std::string m = detail::year_month(a);
                auto [it, inserted] = month_first_arrival[m].emplace(pid, a);
                if (!inserted && a < it->second) it->second = a;
            }
        }
        if (min_arrival) {
            Date warmup_end = min_arrival->add_days(365);
            for (const auto& [month, members] : month_first_arrival) {
                // skip warm-up months
                Date month_start = Date::parse_or_throw(month + "-01", "repeat series");
                if (month_start < warmup_end) continue;
                std::int64_t total = 0, repeat_all = 0, repeat_365 = 0;
                for (const auto& [pid, first_in_month] : members) {
                    ++total;
                    const auto& arrivals = historic_arrivals.at(pid);
                    bool any_before = false, within_365 = false;
                    for (Date a : arrivals) {
                        if (a < first_in_month) {
                            any_before = true;
                            if (first_in_month - a <= 365) within_365 = true;
                        }
                    }
                    if (any_before) ++repeat_all;
                    if (within_365) ++repeat_365;
                }
                EdaReport::RepeatPoint point;
                point.month = month;
                point.all_time_pct = 100.0 * static_cast<double>(repeat_all) / static_cast<double>(total);
                point.trailing_365_pct = 100.0 * static_cast<double>(repeat_365) / static_cast<double>(total);
                report.repeat_series.push_back(std::move(point));
            }
        }
    }

    // retention by group/company/agency flags of the first Historic stay,
    // over profiles with at least one Historic stay
    {
        struct Cell {
            std::int64_t profiles = 0, repeats = 0;
        };
        std::map<std::array<bool, 3>, Cell> cells;
        std::int64_t total_profiles = 0, total_repeats = 0;
        for (const auto& p : ds.profiles) {
            auto it = by_profile.find(p.profile_id);
            if (it == by_profile.end()) continue;
            const Reservation* first_stay = nullptr;
            int historic = 0;
            for (const Reservation* r : it->second) {
                if (r->status != ResStatus::Historic) continue;
                ++historic;
                if (!first_stay || r->arrival_date < first_stay->arrival_date) first_stay = r;
            }
            if (!first_stay) continue;
            std::array<bool, 3> key = {!first_stay->group_id.empty(), !first_stay->company_id.empty(),
                                       !first_stay->agency_id.empty()};
            Cell& cell = cells[key];
            cell.profiles += 1;
            total_profiles += 1;
            if (historic > 1) {
                cell.repeats += 1;
                total_repeats += 1;
            }
        }
        for (const auto& [key, cell] : cells) {
            EdaReport::RetentionCell out;
            out.group = key[0];
            out.company = key[1];
            out.agency = key[2];
            out.profiles = cell.profiles;
            out.retention_pct =
                cell.profiles ? 100.0 * static_cast<double>(cell.repeats) / static_cast<double>(cell.profiles) : 0.0;
            report.retention.push_back(out);
        }
        report.retention_profiles = total_profiles;
        report.retention_overall_pct =
            total_profiles ? 100.0 * static_cast<double>(total_repeats) / static_cast<double>(total_profiles) : 0.0;
    }

    // stay mix per arrival year, Historic only
    {
        std::map<int, std::array<std::int64_t, 3>> by_year;  // week, weekend, other
        for (const auto& r : ds.reservations) {
            if (r.status != ResStatus::Historic) continue;
            auto& counts = by_year[r.arrival_date.year()];
            std::string_view cls = stay_class(r);
            if (cls == "week")
                counts[0] += 1;
            else if (cls == "weekend")
                counts[1] += 1;
            else
                counts[2] += 1;
        }
        for (const auto& [year, counts] : by_year) {
            std::int64_t total = counts[0] + counts[1] + counts[2];
            EdaReport::StayMixYear row;
            row.year = year;
            row.week_pct = 100.0 * static_cast<double>(counts[0]) / static_cast<double>(total);
            row.weekend_pct = 100.0 * static_cast<double>(counts[1]) / static_cast<double>(total);
            row.other_pct = 100.0 - row.week_pct - row.weekend_pct;
            report.stay_mix_by_year.push_back(row);
        }
    }

    // lead time distribution
    if (!ds.reservations.empty()) {
        std::int64_t sum = 0, over45 = 0, under3 = 0;
        int max_lead = 0;
        for (const auto& r : ds.reservations) {
            sum += r.lead_time;
            if (r.lead_time > 45) ++over45;
            if (r.lead_time < 3) ++under3;
            max_lead = std::max(max_lead, r.lead_time);
        }
        double n = static_cast<double>(ds.reservations.size());
        report.lead_time_mean = static_cast<double>(sum) / n;
        report.lead_over_45_pct = 100.0 * static_cast<double>(over45) / n;
        report.lead_under_3_pct = 100.0 * static_cast<double>(under3) / n;
        report.lead_histogram_weekly.assign(static_cast<std::size_t>(max_lead / 7) + 1, 0);
        for (const auto& r : ds.reservations)
            report.lead_histogram_weekly[static_cast<std::size_t>(r.lead_time / 7)] += 1;

        std::int64_t direct = 0;
        for (const auto& r : ds.reservations)
            if (ds.channel_class(r.source_channel) == ChannelClass::Direct) ++direct;
        report.direct_pct_reservations = 100.0 * static_cast<double>(direct) / n;
        report.indirect_pct_reservations = 100.0 - report.direct_pct_reservations;
    }
    return report;
}

inline nlohmann::json eda_to_json(const EdaReport& r) {
    nlohmann::json j;
    j["counts"] = {{"profiles", r.profile_count}, {"reservations", r.reservation_count}, {"folios", r.folio_count}};
    j["status_mix_reservations"] = {{"stay_pct", r.stay_pct_reservations},
                                    {"cancelled_pct", r.cancelled_pct_reservations},
                                    {"noshow_pct", r.noshow_pct_reservations}};
    j["status_mix_room_nights"] = {{"stay_pct", r.stay_pct_room_nights},
                                   {"cancelled_pct", r.cancelled_pct_room_nights},
                                   {"noshow_pct", r.noshow_pct_room_nights}};
    j["revenue_split"] = {{"room_pct", r.revenue_room_pct}, {"ancillary_pct", r.revenue_ancillary_pct}};
    j["repeat_profile_pct"] = r.repeat_profile_pct;
    j["opt_in_pct"] = r.opt_in_pct;
    j["repeat_series"] = nlohmann::json::array();
    for (const auto& p : r.repeat_series)
        j["repeat_series"].push_back(
            {{"month", p.month}, {"all_time_pct", p.all_time_pct}, {"trailing_365_pct", p.trailing_365_pct}});
    j["retention"] = nlohmann::json::array();
    for (const auto& c : r.retention)
        j["retention"].push_back({{"group", c.group},
                                  {"company", c.company},
                                  {"agency", c.agency},
                                  {"profiles", c.profiles},
                                  {"retention_pct", c.retention_pct}});
    j["retention_overall"] = {{"profiles", r.retention_profiles}, {"retention_pct", r.retention_overall_pct}};
    j["stay_mix_by_year"] = nlohmann::json::array();
    for (const auto& y : r.stay_mix_by_year)
        j["stay_mix_by_year"].push_back({{"year", y.year},
                                         {"week_pct", y.week_pct},
                                         {"weekend_pct", y.weekend_pct},
                                         {"other_pct", y.other_pct}});
    j["lead_time"] = {{"mean", r.lead_time_mean},
                      {"over_45_pct", r.lead_over_45_pct},
                      {"under_3_pct", r.lead_under_3_pct},
                      {"weekly_histogram", r.lead_histogram_weekly}};
    j["channel_mix"] = {{"direct_pct_reservations", r.direct_pct_reservations},
                        {"indirect_pct_reservations", r.indirect_pct_reservations},
                        {"profiles_direct_only_pct", r.profiles_direct_only_pct},
                        {"profiles_indirect_only_pct", r.profiles_indirect_only_pct},
                        {"profiles_both_pct", r.profiles_both_pct}};
    nlohmann::json per_year = nlohmann::json::object();
    for (const auto& [year, count] : r.new_profiles_per_year) per_year[std::to_string(year)] = count;
    j["new_profiles_per_year"] = per_year;
    return j;
}

// --- segment characterization -----------------------------------------------

// One segment column of the attribute overview: means for scaled
// features, revenue relative to the population mean (overall = 100,
// RevenueAverage dropped), and a TRUE/FALSE frequency split for binaries.
struct SegmentProfile {
    int segment = 0;                  // 0 = overall column
    std::string name;
    std::int64_t size = 0;
    double size_share = 0.0;
    std::array<double, kFeatureCount> mean{};          // raw means
    std::array<double, kFeatureCount> display{};       // table cell values
    std::array<double, kFeatureCount> true_pct{};      // binary features only
};

inline std::vector<SegmentProfile> segment_profile(std::span<const FeatureVector> features,
                                                   std::span<const int> labels, const SegmentModel& model) {
    if (features.size() != labels.size())
        throw model_error("MismatchedSchema", "assignment does not cover the feature vectors");
    int k = model.k;
    std::vector<SegmentProfile> out(static_cast<std::size_t>(k) + 1);
    for (int s = 0; s <= k; ++s) {
        out[static_cast<std::size_t>(s)].segment = s;
        out[static_cast<std::size_t>(s)].name = s == 0 ? "Overall" : model.name_of(s);
    }

    for (std::size_t i = 0; i < features.size(); ++i) {
        int label = labels[i];
        if (label < 1 || label > k) throw model_error("MismatchedSchema", "label outside the model's range");
        for (SegmentProfile* sp : {&out[0], &out[static_cast<std::size_t>(label)]}) {
            sp->size += 1;
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                sp->mean[f] += features[i].values[f];
                if (kFeatureSchema[f].kind == FeatureKind::Binary && features[i].values[f] != 0.0)
                    sp->true_pct[f] += 1.0;
            }
        }
    }
    for (auto& sp : out) {
        if (sp.size == 0) continue;
        double n = static_cast<double>(sp.size);
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            sp.mean[f] /= n;
            sp.true_pct[f] = kFeatureSchema[f].kind == FeatureKind::Binary ? 100.0 * sp.true_pct[f] / n : 0.0;
        }
        sp.size_share = features.empty() ? 0.0 : n / static_cast<double>(features.size());
    }

    // display cells: revenue relative to overall mean = 100; percentages
    // as 0..100; others as plain means
    const SegmentProfile& overall = out[0];
    for (auto& sp : out) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            switch (kFeatureSchema[f].kind) {
                case FeatureKind::Revenue:
                    sp.display[f] = overall.mean[f] != 0.0 ? 100.0 * sp.mean[f] / overall.mean[f] : 0.0;
                    break;
                case FeatureKind::Percentage:
                    sp.display[f] = 100.0 * sp.mean[f];
                    break;
                case FeatureKind::Binary:
                    sp.display[f] = sp.true_pct[f];
                    break;
                case FeatureKind::Count:
                    sp.display[f] = sp.mean[f];
                    break;
            }
        }
    }
    return out;
}

// Highlight rule for the attribute overview: a mean-style cell stands out
// when it is at least `ratio` times the overall value (or at most 1/ratio
// of it); a frequency cell when the TRUE share differs from the overall
// by at least `frequency_gap_pp` percentage points. A zero overall value
// highlights any positive cell.
struct HighlightRule {
    double ratio = 1.5;
    double frequency_gap_pp = 20.0;
};

struct Highlight {
    int segment = 0;
    std::size_t feature = 0;
};

inline std::vector<Highlight> characteristic_highlight(const std::vector<SegmentProfile>& profiles,
                                                       const HighlightRule& rule = {}) {
    std::vector<Highlight> out;
    if (profiles.empty()) return out;
    const SegmentProfile& overall = profiles[0];
    for (const auto& sp : profiles) {
        if (sp.segment == 0) continue;
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            bool flagged = false;
            if (kFeatureSchema[f].kind == FeatureKind::Binary) {
                flagged = std::fabs(sp.true_pct[f] - overall.true_pct[f]) >= rule.frequency_gap_pp;
            } else {
                double base = overall.display[f];
                double value = sp.display[f];
                if (base == 0.0)
                    flagged = value > 0.0;
                else
                    flagged = value >= rule.ratio * base || value <= base / rule.ratio;
            }
            if (flagged) out.push_back({sp.segment, f});
        }
    }
    return out;
}

inline void write_segment_profile_csv(const std::filesystem::path& path,
                                      const std::vector<SegmentProfile>& profiles,
                                      const std::vector<Highlight>& highlights) {
    std::set<std::pair<int, std::size_t>> marked;
    for (const auto& h : highlights) marked.emplace(h.segment, h.feature);

    std::vector<std::string> header = {"attribute", "category"};
    for (const auto& sp : profiles)
        if (sp.segment != 0) header.push_back(sp.name);
    header.push_back("Overall");

    std::vector<std::vector<std::string>> rows;
    auto emit = [&](std::size_t f, const char* category, auto cell_of) {
        std::vector<std::string> row = {kFeatureSchema[f].name, category};
        for (const auto& sp : profiles) {
            if (sp.segment == 0) continue;
            std::string cell = csv::format_number(cell_of(sp));
            if (marked.count({sp.segment, f})) cell += "*";
            row.push_back(std::move(cell));
        }
        row.push_back(csv::format_number(cell_of(profiles[0])));
        rows.push_back(std::move(row));
    };

    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        if (f == F_RevenueAverage) continue;  // taken out of the overview
        if (kFeatureSchema[f].kind == FeatureKind::Binary) {
            emit(f, "FALSE", [f](const SegmentProfile& sp) { return 100.0 - sp.true_pct[f]; });
            emit(f, "TRUE", [f](const SegmentProfile& sp) { return sp.true_pct[f]; });
        } else {
            emit(f, "", [f](const SegmentProfile& sp) { return sp.display[f]; });
        }
    }

    std::vector<std::string> size_row = {"SegmentShare", ""};
    for (const auto& sp : profiles)
        if (sp.segment != 0) size_row.push_back(csv::format_number(100.0 * sp.size_share));
    size_row.push_back("100");
    rows.push_back(std::move(size_row));
    csv::write_file(path, header, rows);
}

// --- marketing target lists ---------------------------------------------------

struct TargetRow {
    std::string golden_id;
    std::string email;
    int segment = 0;
};

struct TargetList {
    std::vector<TargetRow> rows;        // opt-in, email-bearing members of the chosen segments
    std::int64_t segment_population = 0;  // all profiles in the chosen segments
    double share_of_segments = 0.0;
};

inline TargetList target_list(std::span<const FeatureVector> features, std::span<const int> labels,
                              const std::vector<GoldenProfile>& goldens, const std::set<int>& segments) {
    if (segments.empty()) throw config_error("InvalidConfig", "target list needs at least one segment");
    std::unordered_map<std::string, const GoldenProfile*> by_id;
    by_id.reserve(goldens.size());
    for (const auto& g : goldens) by_id.emplace(g.golden_id, &g);

    TargetList out;
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (!segments.count(labels[i])) continue;
        out.segment_population += 1;
        auto it = by_id.find(features[i].golden_id);
        if (it == by_id.end()) continue;
        const GoldenProfile& g = *it->second;
        if (!g.marketing_opt_in || g.email.empty()) continue;
        out.rows.push_back({g.golden_id, g.email, labels[i]});
    }
    if (out.segment_population > 0)
        out.share_of_segments =
            static_cast<double>(out.rows.size()) / static_cast<double>(out.segment_population);
    return out;
}

inline void write_targets_csv(const std::filesystem::path& path, const TargetList& list,
                              const SegmentModel& model) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(list.rows.size());
    for (const auto& r : list.rows) rows.push_back({r.golden_id, r.email, model.name_of(r.segment)});
    csv::write_file(path, {"golden_id", "email", "segment"}, rows);
}

}  // namespace segforge
