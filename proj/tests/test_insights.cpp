#include <gtest/gtest.h>

#include "segforge/insights.hpp"
#include "segforge/synth.hpp"

using namespace segforge;

namespace {

Dataset dataset_with_statuses(int historic, int cancelled, int noshow) {
    Dataset ds;
    ds.channel_map = synth::default_channel_map();
    Profile p;
    p.profile_id = "P1";
    p.created_at = Date::from_ymd(2016, 1, 1);
    ds.profiles.push_back(p);
    int id = 0;
    auto add = [&](ResStatus status, int count) {
        for (int i = 0; i < count; ++i) {
            Reservation r;
            r.reservation_id = "R" + std::to_string(id++);
            r.profile_id = "P1";
            r.status = status;
            r.arrival_date = Date::from_ymd(2016, 3, 1).add_days(id);
            r.departure_date = r.arrival_date.add_days(1);
            r.booking_date = r.arrival_date.add_days(-5);
            r.lead_time = 5;
            r.length_of_stay = 1;
            r.source_channel = "Website";
            ds.reservations.push_back(std::move(r));
        }
    };
    add(ResStatus::Historic, historic);
    add(ResStatus::Cancelled, cancelled);
    add(ResStatus::NoShow, noshow);
    ds.rebuild_indexes();
    return ds;
}

}  // namespace

TEST(Eda, StatusMixExactShares) {
    Dataset ds = dataset_with_statuses(8, 2, 0);
    EdaReport r = eda_report(ds);
    EXPECT_DOUBLE_EQ(r.stay_pct_reservations, 80.0);
    EXPECT_DOUBLE_EQ(r.cancelled_pct_reservations, 20.0);
    EXPECT_DOUBLE_EQ(r.noshow_pct_reservations, 0.0);
    // identity holds exactly by construction
    EXPECT_EQ(r.stay_pct_reservations + r.cancelled_pct_reservations + r.noshow_pct_reservations, 100.0);
    EXPECT_EQ(r.stay_pct_room_nights + r.cancelled_pct_room_nights + r.noshow_pct_room_nights, 100.0);
}

TEST(Eda, SingleRepeatProfileIsFullShare) {
    Dataset ds = dataset_with_statuses(2, 0, 0);
    EdaReport r = eda_report(ds);
    EXPECT_DOUBLE_EQ(r.repeat_profile_pct, 100.0);
}

TEST(Eda, PlantedRepeatRateRecovered) {
    // Two archetypes: always-two-stays (15%) vs always-one-stay (85%).
    std::vector<synth::Archetype> kinds(2);
    kinds[0].name = "twice";
    kinds[0].reservation_count_weights = {0.0, 1.0};
    kinds[0].cancel_prob = 0.0;
    kinds[0].noshow_prob = 0.0;
    kinds[0].los_weights = {1.0};
    kinds[1].name = "once";
    kinds[1].reservation_count_weights = {1.0};
    kinds[1].cancel_prob = 0.0;
    kinds[1].noshow_prob = 0.0;
    kinds[1].los_weights = {1.0};

    synth::GeneratorConfig config;
    config.seed = 77;
    config.guest_count = 5000;
    config.archetype_weights = {0.15, 0.85};
    auto data = synth::generate(config, kinds);
    Dataset ds;
    ds.profiles = data.profiles;
    ds.reservations = data.reservations;
    ds.channel_map = synth::default_channel_map();
    ds.rebuild_indexes();

    EdaReport r = eda_report(ds);
    EXPECT_NEAR(r.repeat_profile_pct, 15.0, 1.0);
}

TEST(Eda, PlantedOptInRateRecovered) {
    std::vector<synth::Archetype> kinds(1);
    kinds[0].name = "any";
    kinds[0].reservation_count_weights = {1.0};
    kinds[0].los_weights = {1.0};
    kinds[0].opt_in_prob = 0.476;
    synth::GeneratorConfig config;
    config.seed = 78;
    config.guest_count = 20000;
    config.archetype_weights = {1.0};
    auto data = synth::generate(config, kinds);
    Dataset ds;
    ds.profiles = data.profiles;
    ds.reservations = data.reservations;
    ds.channel_map = synth::default_channel_map();
    ds.rebuild_indexes();
    EdaReport r = eda_report(ds);
    EXPECT_NEAR(r.opt_in_pct, 47.6, 1.0);
}

TEST(Eda, RetentionAndSeriesShapes) {
    synth::GeneratorConfig config;
    config.seed = 79;
    config.guest_count = 800;
    config.archetype_weights = {0.25, 0.25, 0.25, 0.25};
    auto data = synth::generate(config);
    Dataset ds;
    ds.profiles = data.profiles;
    ds.reservations = data.reservations;
    ds.folios = data.folios;
    ds.channel_map = synth::default_channel_map();
    ds.rebuild_indexes();
    EdaReport r = eda_report(ds);

    std::int64_t cells_total = 0;
    for (const auto& cell : r.retention) {
        cells_total += cell.profiles;
        EXPECT_GE(cell.retention_pct, 0.0);
        EXPECT_LE(cell.retention_pct, 100.0);
    }
    EXPECT_EQ(cells_total, r.retention_profiles);

    for (const auto& y : r.stay_mix_by_year)
        EXPECT_EQ(y.week_pct + y.weekend_pct + y.other_pct, 100.0);

    // warm-up window removed: no month earlier than min arrival + 365
    ASSERT_FALSE(r.repeat_series.empty());
    EXPECT_GE(r.repeat_series.front().month, "2015-12");

    std::int64_t hist_total = 0;
    for (auto c : r.lead_histogram_weekly) hist_total += c;
    EXPECT_EQ(hist_total, r.reservation_count);

    nlohmann::json j = eda_to_json(r);
    EXPECT_TRUE(j.contains("status_mix_reservations"));
    EXPECT_TRUE(j.contains("repeat_series"));
}

namespace {

SegmentModel two_segment_model() {
    SegmentModel model;
    model.k = 2;
    model.segment_names = {{1, "Low"}, {2, "High"}};
    return model;
}

std::vector<FeatureVector> revenue_population(double lo, double hi, int n_each) {
    std::vector<FeatureVector> out;
    int id = 0;
    for (double revenue : {lo, hi}) {
        for (int i = 0; i < n_each; ++i) {
            FeatureVector v;
            v.golden_id = "G" + std::to_string(id++);
            v.values.fill(0.0);
            v.values[F_RevenueTotal] = revenue;
            v.values[F_RepeatBinary] = revenue == hi ? 1.0 : 0.0;
            v.values[F_WeekStay] = 0.5;
            v.values[F_ReservationsTotal] = 1.0;
            out.push_back(std::move(v));
        }
    }
    return out;
}

}  // namespace

TEST(SegmentProfile, RelativeRevenueMeans) {
    auto features = revenue_population(50.0, 150.0, 10);
    std::vector<int> labels(20, 1);
    for (int i = 10; i < 20; ++i) labels[static_cast<std::size_t>(i)] = 2;
    auto profiles = segment_profile(features, labels, two_segment_model());
    ASSERT_EQ(profiles.size(), 3u);
    const auto& overall = profiles[0];
    EXPECT_DOUBLE_EQ(overall.display[F_RevenueTotal], 100.0);
    EXPECT_DOUBLE_EQ(profiles[1].display[F_RevenueTotal], 50.0);
    EXPECT_DOUBLE_EQ(profiles[2].display[F_RevenueTotal], 150.0);
    // binary TRUE/FALSE split adds to 100
    EXPECT_DOUBLE_EQ(profiles[2].true_pct[F_RepeatBinary], 100.0);
    EXPECT_DOUBLE_EQ(profiles[1].true_pct[F_RepeatBinary], 0.0);
    // size shares sum to 1
    double shares = profiles[1].size_share + profiles[2].size_share;
    EXPECT_NEAR(shares, 1.0, 1e-9);
}

TEST(SegmentProfile, WholePopulationSegmentEqualsOverall) {
    auto features = revenue_population(80.0, 120.0, 5);
    std::vector<int> labels(10, 1);
    SegmentModel model;
    model.k = 1;
    auto profiles = segment_profile(features, labels, model);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        if (kFeatureSchema[f].kind == FeatureKind::Revenue && profiles[0].mean[f] != 0.0) {
            EXPECT_DOUBLE_EQ(profiles[1].display[f], 100.0);
        }
    }
}

TEST(SegmentProfile, OverallIsSizeWeightedMeanOfSegments) {
    auto features = revenue_population(50.0, 150.0, 10);
    features.resize(15);  // unequal sizes: 10 low, 5 high
    std::vector<int> labels(15, 1);
    for (int i = 10; i < 15; ++i) labels[static_cast<std::size_t>(i)] = 2;
    auto profiles = segment_profile(features, labels, two_segment_model());
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        double weighted = profiles[1].mean[f] * profiles[1].size_share + profiles[2].mean[f] * profiles[2].size_share;
        if (profiles[0].mean[f] != 0.0)
            EXPECT_NEAR(weighted / profiles[0].mean[f], 1.0, 1e-6);
        else
            EXPECT_NEAR(weighted, 0.0, 1e-9);
    }
}

TEST(Highlight, RatioAndGapRules) {
    auto features = revenue_population(50.0, 150.0, 10);
    std::vector<int> labels(20, 1);
    for (int i = 10; i < 20; ++i) labels[static_cast<std::size_t>(i)] = 2;
    auto profiles = segment_profile(features, labels, two_segment_model());
    auto highlights = characteristic_highlight(profiles, {1.5, 20.0});

    auto has = [&](int segment, std::size_t feature) {
        for (const auto& h : highlights)
            if (h.segment == segment && h.feature == feature) return true;
        return false;
    };
    EXPECT_TRUE(has(2, F_RevenueTotal));   // 150 vs 100 at ratio 1.5
    EXPECT_TRUE(has(1, F_RevenueTotal));   // 50 vs 100: below 1/1.5
    EXPECT_FALSE(has(1, F_WeekStay));      // equal everywhere
    EXPECT_TRUE(has(1, F_RepeatBinary));   // 0% vs 50%: gap 50pp
    EXPECT_TRUE(has(2, F_RepeatBinary));
}

TEST(Highlight, DeviationSidesAndZeroBaseline) {
    auto features = revenue_population(0.0, 0.0, 5);
    features[0].values[F_RepeatTotal] = 3.0;  // one segment-1 member has repeats
    std::vector<int> labels(10, 1);
    for (int i = 5; i < 10; ++i) labels[static_cast<std::size_t>(i)] = 2;
    auto profiles = segment_profile(features, labels, two_segment_model());
    auto highlights = characteristic_highlight(profiles, {1.5, 20.0});
    bool seg1_repeat = false, seg2_repeat = false, any_los = false;
    for (const auto& h : highlights) {
        if (h.feature == F_RepeatTotal && h.segment == 1) seg1_repeat = true;
        if (h.feature == F_RepeatTotal && h.segment == 2) seg2_repeat = true;
        if (h.feature == F_LOSAverage) any_los = true;
    }
    EXPECT_TRUE(seg1_repeat);  // 0.6 vs overall 0.3: high-side outlier
    EXPECT_TRUE(seg2_repeat);  // 0 vs overall 0.3: low-side outlier
    EXPECT_FALSE(any_los);     // all-zero column: zero baseline, zero cells, no flags
}

TEST(TargetList, OnlyOptInWithEmail) {
    auto features = revenue_population(50.0, 150.0, 3);
    std::vector<int> labels = {1, 1, 1, 2, 2, 2};
    std::vector<GoldenProfile> goldens(6);
    for (int i = 0; i < 6; ++i) {
        goldens[static_cast<std::size_t>(i)].golden_id = "G" + std::to_string(i);
        goldens[static_cast<std::size_t>(i)].email = "g" + std::to_string(i) + "@x.com";
        goldens[static_cast<std::size_t>(i)].marketing_opt_in = i == 3 || i == 4;
    }
    goldens[4].email.clear();  // opt-in but no email -> excluded

    TargetList list = target_list(features, labels, goldens, {2});
    EXPECT_EQ(list.segment_population, 3);
    ASSERT_EQ(list.rows.size(), 1u);  // only G3 is opt-in with an email
    EXPECT_EQ(list.rows[0].golden_id, "G3");
    EXPECT_EQ(list.rows[0].segment, 2);
}

TEST(TargetList, NoOptInGivesEmptyList) {
    auto features = revenue_population(50.0, 150.0, 2);
    std::vector<int> labels = {1, 1, 2, 2};
    std::vector<GoldenProfile> goldens(4);
    for (int i = 0; i < 4; ++i) {
        goldens[static_cast<std::size_t>(i)].golden_id = "G" + std::to_string(i);
        goldens[static_cast<std::size_t>(i)].email = "g@x.com";
        goldens[static_cast<std::size_t>(i)].marketing_opt_in = false;
    }
    TargetList list = target_list(features, labels, goldens, {1, 2});
    EXPECT_TRUE(list.rows.empty());
    EXPECT_THROW(target_list(features, labels, goldens, {}), Error);
}

TEST(TargetList, AllOptInEqualsSegmentMembership) {
    auto features = revenue_population(50.0, 150.0, 3);
    std::vector<int> labels = {1, 1, 1, 2, 2, 2};
    std::vector<GoldenProfile> goldens(6);
    for (int i = 0; i < 6; ++i) {
        goldens[static_cast<std::size_t>(i)].golden_id = "G" + std::to_string(i);
        goldens[static_cast<std::size_t>(i)].email = "g@x.com";
        goldens[static_cast<std::size_t>(i)].marketing_opt_in = true;
    }
    TargetList list = target_list(features, labels, goldens, {1});
    EXPECT_EQ(list.rows.size(), 3u);
    EXPECT_DOUBLE_EQ(list.share_of_segments, 1.0);
    for (const auto& row : list.rows) EXPECT_EQ(row.segment, 1);
}
