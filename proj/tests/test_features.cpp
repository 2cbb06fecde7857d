#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "segforge/features.hpp"
#include "segforge/rng.hpp"

using namespace segforge;

namespace {

Dataset tiny_dataset() {
    Dataset ds;
    ds.channel_map = {{"Web", ChannelClass::Direct}, {"OTA", ChannelClass::Indirect}};
    auto add_profile = [&](std::string id, std::string loyalty = "") {
        Profile p;
        p.profile_id = std::move(id);
        p.loyalty_level = std::move(loyalty);
        p.created_at = *Date::parse("2015-01-01");
        ds.profiles.push_back(std::move(p));
    };
    add_profile("P1");
    add_profile("P2", "Gold");
    add_profile("P3");
    auto add_res = [&](std::string id, std::string pid, ResStatus status, std::string book, std::string arr,
                       std::string dep, std::string channel, std::string group = "", std::string company = "",
                       std::string agency = "") {
        Reservation r;
        r.reservation_id = std::move(id);
        r.profile_id = std::move(pid);
        r.status = status;
        r.booking_date = *Date::parse(book);
        r.arrival_date = *Date::parse(arr);
        r.departure_date = *Date::parse(dep);
        r.source_channel = std::move(channel);
        r.group_id = std::move(group);
        r.company_id = std::move(company);
        r.agency_id = std::move(agency);
        r.lead_time = static_cast<int>(r.arrival_date - r.booking_date);
        r.length_of_stay = static_cast<int>(r.departure_date - r.arrival_date);
        ds.reservations.push_back(std::move(r));
    };
    // P1: one historic, one cancelled
    add_res("R1", "P1", ResStatus::Historic, "2018-05-01", "2018-05-10", "2018-05-12", "Web", "", "C1", "");
    add_res("R2", "P1", ResStatus::Cancelled, "2018-06-01", "2018-06-10", "2018-06-11", "OTA");
    // P2: single historic single-night last-minute stay (lead 2, LOS 1)
    add_res("R3", "P2", ResStatus::Historic, "2019-02-04", "2019-02-06", "2019-02-07", "Web");
    // P3: early bird, lead 46, historic
    add_res("R4", "P3", ResStatus::Historic, "2018-01-01", "2018-02-16", "2018-02-18", "OTA", "G1", "", "A1");

    auto add_folio = [&](std::string id, std::string rid, std::string code, std::int64_t cents, TxnClass cls) {
        ds.folios.push_back({std::move(id), std::move(rid), std::move(code), cents, cls});
    };
    add_folio("F1", "R1", "RM101", 20000, TxnClass::Room);
    add_folio("F2", "R1", "SPA", 5000, TxnClass::Ancillary);
    add_folio("F3", "R1", "CITYTAX", 990, TxnClass::Other);
    add_folio("F4", "R3", "RM101", 9900, TxnClass::Room);
    add_folio("F5", "R4", "RM101", 30000, TxnClass::Room);
    ds.rebuild_indexes();
    return ds;
}

const FeatureVector& find_vector(const std::vector<FeatureVector>& vs, const std::string& id) {
    for (const auto& v : vs)
        if (v.golden_id == id) return v;
    throw std::runtime_error("missing vector " + id);
}

}  // namespace

TEST(BuildFeatures, StatusSharesAndCounts) {
    Dataset ds = tiny_dataset();
    auto vectors = build_features(ds, {}, *Date::parse("2020-01-01"));
    ASSERT_EQ(vectors.size(), 3u);
    const auto& p1 = find_vector(vectors, "P1").values;
    EXPECT_DOUBLE_EQ(p1[F_ReservationsTotal], 2.0);
    EXPECT_DOUBLE_EQ(p1[F_ReservationsHistoric], 0.5);
    EXPECT_DOUBLE_EQ(p1[F_ReservationsCancelled], 0.5);
    EXPECT_DOUBLE_EQ(p1[F_ReservationsCompany], 0.5);
    EXPECT_DOUBLE_EQ(p1[F_ReservationsSourceDirect], 0.5);
    EXPECT_DOUBLE_EQ(p1[F_ReservationsSourceIndirect], 0.5);
    EXPECT_DOUBLE_EQ(p1[F_RepeatBinary], 1.0);
    EXPECT_DOUBLE_EQ(p1[F_RepeatTotal], 1.0);
    EXPECT_DOUBLE_EQ(p1[F_RepeatFrequencyMediumBinary], 0.0);  // needs > 1
    EXPECT_DOUBLE_EQ(p1[F_RevenueTotal], 250.0);               // tax excluded
    EXPECT_DOUBLE_EQ(p1[F_RevenueAverage], 125.0);
    EXPECT_DOUBLE_EQ(p1[F_RevenueTotalRoom], 200.0);
    EXPECT_DOUBLE_EQ(p1[F_RevenueTotalAncillary], 50.0);
    EXPECT_DOUBLE_EQ(p1[F_LoyaltyBinary], 0.0);
}

TEST(BuildFeatures, SingleNightLastMinuteFlags) {
    Dataset ds = tiny_dataset();
    auto vectors = build_features(ds, {}, *Date::parse("2020-01-01"));
    const auto& p2 = find_vector(vectors, "P2").values;
    EXPECT_DOUBLE_EQ(p2[F_LOSAverage], 1.0);
    EXPECT_DOUBLE_EQ(p2[F_SingleNightBinary], 1.0);
    EXPECT_DOUBLE_EQ(p2[F_ShortStayBinary], 0.0);
    EXPECT_DOUBLE_EQ(p2[F_MediumStayBinary], 0.0);
    EXPECT_DOUBLE_EQ(p2[F_LastMinuteBookerBinary], 1.0);  // lead 2 < 3
    EXPECT_DOUBLE_EQ(p2[F_EarlyBirdBookerBinary], 0.0);
    EXPECT_DOUBLE_EQ(p2[F_LoyaltyBinary], 1.0);
}

TEST(BuildFeatures, EarlyBirdAt46Days) {
    Dataset ds = tiny_dataset();
    auto vectors = build_features(ds, {}, *Date::parse("2020-01-01"));
    const auto& p3 = find_vector(vectors, "P3").values;
    EXPECT_DOUBLE_EQ(p3[F_EarlyBirdBookerBinary], 1.0);  // lead 46 > 45
    EXPECT_DOUBLE_EQ(p3[F_ReservationsGroup], 1.0);
    EXPECT_DOUBLE_EQ(p3[F_ReservationsAgency], 1.0);
}

TEST(BuildFeatures, AsOfFiltersReservations) {
    Dataset ds = tiny_dataset();
    // As of mid-2018 only P1's first stay and P3's stay qualify.
    auto vectors = build_features(ds, {}, *Date::parse("2018-06-01"));
    ASSERT_EQ(vectors.size(), 2u);
    const auto& p1 = find_vector(vectors, "P1").values;
    EXPECT_DOUBLE_EQ(p1[F_ReservationsTotal], 1.0);
    EXPECT_DOUBLE_EQ(p1[F_ReservationsHistoric], 1.0);
    EXPECT_DOUBLE_EQ(p1[F_RepeatBinary], 0.0);
    // RepeatLast365 relative to the evaluation date
    EXPECT_DOUBLE_EQ(p1[F_RepeatLast365Binary], 1.0);
    auto later = build_features(ds, {}, *Date::parse("2019-06-20"));
    EXPECT_DOUBLE_EQ(find_vector(later, "P3").values[F_RepeatLast365Binary], 0.0);
}

TEST(BuildFeatures, TruncationCommutesWithAsOf) {
    Dataset full = tiny_dataset();
    Date as_of = *Date::parse("2018-06-01");
    Dataset truncated = full;
    std::erase_if(truncated.reservations, [&](const Reservation& r) { return !(r.arrival_date < as_of); });
    std::set<std::string> kept;
    for (const auto& r : truncated.reservations) kept.insert(r.reservation_id);
    std::erase_if(truncated.folios, [&](const Folio& f) { return !kept.count(f.reservation_id); });
    truncated.rebuild_indexes();

    auto a = build_features(full, {}, as_of);
    auto b = build_features(truncated, {}, as_of);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].golden_id, b[i].golden_id);
        for (std::size_t f = 0; f < kFeatureCount; ++f) EXPECT_DOUBLE_EQ(a[i].values[f], b[i].values[f]);
    }
}

TEST(BuildFeatures, GoldenMapAggregatesMembers) {
    Dataset ds = tiny_dataset();
    GoldenMap golden = {{"P1", "P1"}, {"P2", "P1"}, {"P3", "P3"}};
    auto vectors = build_features(ds, golden, *Date::parse("2020-01-01"));
    ASSERT_EQ(vectors.size(), 2u);
    const auto& merged = find_vector(vectors, "P1").values;
    EXPECT_DOUBLE_EQ(merged[F_ReservationsTotal], 3.0);
    EXPECT_DOUBLE_EQ(merged[F_RepeatTotal], 2.0);
    EXPECT_DOUBLE_EQ(merged[F_RepeatFrequencyMediumBinary], 1.0);
    EXPECT_DOUBLE_EQ(merged[F_LoyaltyBinary], 1.0);  // from member P2
    EXPECT_DOUBLE_EQ(merged[F_RevenueTotal], 349.0);
}

TEST(BuildFeatures, EmptyCohortThrows) {
    Dataset ds = tiny_dataset();
    EXPECT_THROW(build_features(ds, {}, *Date::parse("2017-01-01")), Error);
}

TEST(BusinessLogic, FlagTableThresholds) {
    // Stay-length flags
    BusinessFlags f3 = apply_business_logic(3.0, 10.0, 0.0, false);
    EXPECT_TRUE(f3.short_stay);
    EXPECT_FALSE(f3.long_stay);
    BusinessFlags f4 = apply_business_logic(4.0, 10.0, 0.0, false);
    EXPECT_TRUE(f4.long_stay);
    EXPECT_FALSE(f4.short_stay);
    BusinessFlags f1 = apply_business_logic(1.0, 10.0, 0.0, false);
    EXPECT_TRUE(f1.single_night);
    // Lead-time flags: strict thresholds
    EXPECT_TRUE(apply_business_logic(2.0, 2.9, 0.0, false).last_minute);
    EXPECT_FALSE(apply_business_logic(2.0, 3.0, 0.0, false).last_minute);
    EXPECT_FALSE(apply_business_logic(2.0, 45.0, 0.0, false).early_bird);
    EXPECT_TRUE(apply_business_logic(2.0, 45.5, 0.0, false).early_bird);
    // Repeat frequency medium: repeat count above one
    EXPECT_FALSE(apply_business_logic(2.0, 10.0, 1.0, false).repeat_frequency_medium);
    EXPECT_TRUE(apply_business_logic(2.0, 10.0, 2.0, false).repeat_frequency_medium);
    EXPECT_TRUE(apply_business_logic(2.0, 10.0, 0.0, true).loyalty_member);
}

TEST(BusinessLogic, ExactlyOneStayFlagForPositiveLos) {
    for (double los : {1.0, 1.5, 2.0, 3.0, 3.5, 10.0}) {
        BusinessFlags f = apply_business_logic(los, 5.0, 0.0, false);
        EXPECT_EQ((f.single_night ? 1 : 0) + (f.short_stay ? 1 : 0) + (f.long_stay ? 1 : 0), 1) << los;
    }
}

TEST(Reduce, PercentageSnapsToGrid) {
    std::vector<FeatureVector> vs(2);
    vs[0].values.fill(0.0);
    vs[1].values.fill(0.0);
    vs[0].values[F_WeekStay] = 0.37;
    vs[1].values[F_WeekStay] = 0.5;     // half rounds up
    vs[0].values[F_WeekendStay] = 0.1;  // half rounds up
    vs[1].values[F_WeekendStay] = 0.09;
    reduce_dimensionality(vs);
    EXPECT_DOUBLE_EQ(vs[0].values[F_WeekStay], 0.4);
    EXPECT_DOUBLE_EQ(vs[1].values[F_WeekStay], 0.6);
    EXPECT_DOUBLE_EQ(vs[0].values[F_WeekendStay], 0.2);
    EXPECT_DOUBLE_EQ(vs[1].values[F_WeekendStay], 0.0);
}

TEST(Reduce, RevenueRoundsToHundred) {
    std::vector<FeatureVector> vs(2);
    vs[0].values.fill(0.0);
    vs[1].values.fill(0.0);
    vs[0].values[F_RevenueTotal] = 1234.0;
    vs[1].values[F_RevenueTotal] = 960.0;
    reduce_dimensionality(vs);
    EXPECT_DOUBLE_EQ(vs[0].values[F_RevenueTotal], 1200.0);
    EXPECT_DOUBLE_EQ(vs[1].values[F_RevenueTotal], 1000.0);
}

TEST(Reduce, CountCappedAtNearestRank95) {
    // Values 1..100: the 95% nearest-rank quantile is the 95th value.
    std::vector<FeatureVector> vs(100);
    for (int i = 0; i < 100; ++i) {
        vs[static_cast<std::size_t>(i)].values.fill(0.0);
        vs[static_cast<std::size_t>(i)].values[F_ReservationsTotal] = i + 1.0;
    }
    std::vector<double> column;
    for (const auto& v : vs) column.push_back(v.values[F_ReservationsTotal]);
    EXPECT_DOUBLE_EQ(oracle::quantile_nearest_rank(column, 0.95), 95.0);

    ReductionCaps caps = reduce_dimensionality(vs);
    EXPECT_DOUBLE_EQ(caps.cap[F_ReservationsTotal], 95.0);
    double max_seen = 0.0;
    for (const auto& v : vs) max_seen = std::max(max_seen, v.values[F_ReservationsTotal]);
    EXPECT_DOUBLE_EQ(max_seen, 95.0);
    EXPECT_DOUBLE_EQ(vs[99].values[F_ReservationsTotal], 95.0);  // input 100 capped
    EXPECT_DOUBLE_EQ(vs[42].values[F_ReservationsTotal], 43.0);  // below cap untouched
}

TEST(Reduce, QuantileAgainstOracleOnRandomData) {
    Rng rng(11);
    for (int run = 0; run < 20; ++run) {
        std::vector<double> values;
        std::size_t n = 3 + rng.below(200);
        for (std::size_t i = 0; i < n; ++i) values.push_back(std::floor(rng.u01() * 50.0));
        for (double p : {0.5, 0.95, 0.99}) {
            EXPECT_DOUBLE_EQ(nearest_rank_quantile(values, p), oracle::quantile_nearest_rank(values, p));
        }
    }
}

TEST(Reduce, InvariantsOnRandomPopulation) {
    Rng rng(12);
    std::vector<FeatureVector> vs(400);
    for (auto& v : vs) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            switch (kFeatureSchema[f].kind) {
                case FeatureKind::Count: v.values[f] = static_cast<double>(rng.range(0, 40)); break;
                case FeatureKind::Percentage: v.values[f] = rng.u01(); break;
                case FeatureKind::Revenue: v.values[f] = rng.u01() * 12345.0; break;
                case FeatureKind::Binary: v.values[f] = rng.chance(0.3) ? 1.0 : 0.0; break;
            }
        }
    }
    std::vector<FeatureVector> raw = vs;
    ReductionCaps caps = reduce_dimensionality(vs);

    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        FeatureKind kind = kFeatureSchema[f].kind;
        std::set<double> distinct;
        std::vector<double> raw_column;
        for (const auto& v : raw) raw_column.push_back(v.values[f]);
        for (const auto& v : vs) distinct.insert(v.values[f]);
        if (kind == FeatureKind::Percentage) {
            EXPECT_LE(distinct.size(), 6u);
            for (double x : distinct) EXPECT_DOUBLE_EQ(x * 5.0, std::nearbyint(x * 5.0));
        }
        if (kind == FeatureKind::Count) {
            double q95 = oracle::quantile_nearest_rank(raw_column, 0.95);
            for (double x : distinct) EXPECT_LE(x, q95);
        }
        if (kind == FeatureKind::Revenue) {
            double q99 = oracle::quantile_nearest_rank(raw_column, 0.99);
            double cap = std::floor(q99 / 100.0 + 0.5) * 100.0;
            for (double x : distinct) {
                EXPECT_LE(x, cap);
                EXPECT_DOUBLE_EQ(std::fmod(x, 100.0), 0.0);
            }
        }
        if (kind == FeatureKind::Binary) {
            for (double x : distinct) EXPECT_TRUE(x == 0.0 || x == 1.0);
        }
    }

    // Monotonicity: never reorders, only collapses.
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        for (std::size_t i = 0; i < raw.size(); ++i)
            for (std::size_t j = 0; j < 40; ++j) {
                std::size_t other = (i * 7 + j * 13) % raw.size();
                double a_raw = raw[i].values[f], b_raw = raw[other].values[f];
                double a_red = vs[i].values[f], b_red = vs[other].values[f];
                if (a_raw < b_raw) { EXPECT_LE(a_red, b_red); }
                if (a_raw > b_raw) { EXPECT_GE(a_red, b_red); }
            }
    }

    // Frozen-cap replay reproduces the same transform.
    std::vector<FeatureVector> replay = raw;
    apply_reduction(replay, caps);
    for (std::size_t i = 0; i < raw.size(); ++i)
        for (std::size_t f = 0; f < kFeatureCount; ++f)
            EXPECT_EQ(replay[i].values[f], vs[i].values[f]);
}

TEST(FeatureCsv, RoundTripsThroughFile) {
    Rng rng(13);
    std::vector<FeatureVector> vs(30);
    int idx = 0;
    for (auto& v : vs) {
        v.golden_id = "G" + std::to_string(1000 + idx++);
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            switch (kFeatureSchema[f].kind) {
                case FeatureKind::Count: v.values[f] = static_cast<double>(rng.range(0, 9)); break;
                case FeatureKind::Percentage: v.values[f] = rng.u01(); break;
                case FeatureKind::Revenue: v.values[f] = rng.u01() * 900.0; break;
                case FeatureKind::Binary: v.values[f] = rng.chance(0.5) ? 1.0 : 0.0; break;
            }
        }
    }
    reduce_dimensionality(vs);  // values now carry at most 3 decimals
    auto path = std::filesystem::temp_directory_path() / "segforge_features_test.csv";
    write_features_csv(path, vs);
    auto back = read_features_csv(path);
    ASSERT_EQ(back.size(), vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i) {
        EXPECT_EQ(back[i].golden_id, vs[i].golden_id);
        for (std::size_t f = 0; f < kFeatureCount; ++f) EXPECT_EQ(back[i].values[f], vs[i].values[f]);
    }
    std::filesystem::remove(path);
}
