#include <gtest/gtest.h>

#include <array>

#include "segforge/gower.hpp"
#include "segforge/rng.hpp"

using namespace segforge;

namespace {

// Random mixed-type vector respecting each feature's kind.
FeatureVector random_vector(Rng& rng, const std::string& id) {
    FeatureVector v;
    v.golden_id = id;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        switch (kFeatureSchema[f].kind) {
            case FeatureKind::Count: v.values[f] = static_cast<double>(rng.range(0, 20)); break;
            case FeatureKind::Percentage: v.values[f] = rng.u01(); break;
            case FeatureKind::Revenue: v.values[f] = rng.u01() * 5000.0; break;
            case FeatureKind::Binary: v.values[f] = rng.chance(0.5) ? 1.0 : 0.0; break;
        }
    }
    return v;
}

FeatureRanges unit_ranges() {
    FeatureRanges r;
    r.r.fill(1.0);
    return r;
}

}  // namespace

TEST(Gower, IdenticalVectorsAreAtZero) {
    Rng rng(1);
    FeatureVector a = random_vector(rng, "a");
    FeatureRanges ranges = compute_ranges(std::vector<FeatureVector>{a, a});
    EXPECT_EQ(gower_distance(a, a, unit_ranges()), 0.0);
    EXPECT_EQ(gower_distance(a, a, ranges), 0.0);
}

TEST(Gower, SingleBinaryMismatchContributesOneTerm) {
    FeatureVector a, b;
    a.values.fill(0.5);
    b.values.fill(0.5);
    b.values[F_RepeatBinary] = 1.0;
    a.values[F_RepeatBinary] = 0.0;
    double d = gower_distance(a, b, unit_ranges());
    EXPECT_DOUBLE_EQ(d, 1.0 / 25.0);
}

TEST(Gower, SingleNumericFeatureClosedForm) {
    // Only one feature contributes: range 10, values 2 and 7 -> 0.5.
    FeatureVector a, b;
    a.values.fill(0.0);
    b.values.fill(0.0);
    a.values[F_ReservationsTotal] = 2.0;
    b.values[F_ReservationsTotal] = 7.0;
    FeatureRanges ranges;  // all zero: excluded
    ranges.r[F_ReservationsTotal] = 10.0;
    EXPECT_DOUBLE_EQ(gower_distance(a, b, ranges), 0.5);
}

TEST(Gower, AgreeingFeatureNeverIncreasesDistance) {
    Rng rng(2);
    for (int it = 0; it < 200; ++it) {
        FeatureVector a = random_vector(rng, "a");
        FeatureVector b = random_vector(rng, "b");
        FeatureRanges with_all = unit_ranges();
        FeatureRanges minus_one = with_all;
        // Force agreement on one feature, then drop it from the space.
        b.values[F_LOSAverage] = a.values[F_LOSAverage];
        minus_one.r[F_LOSAverage] = 0.0;
        double d_with = gower_distance(a, b, with_all);
        double d_without = gower_distance(a, b, minus_one);
        EXPECT_LE(d_with, d_without + 1e-12);
    }
}

TEST(Gower, PropertySuiteOnRandomPairs) {
    Rng rng(3);
    std::vector<FeatureVector> population;
    for (int i = 0; i < 64; ++i) population.push_back(random_vector(rng, "p" + std::to_string(i)));
    FeatureRanges ranges = compute_ranges(population);
    for (int it = 0; it < 10000; ++it) {
        const FeatureVector& a = population[rng.below(population.size())];
        const FeatureVector& b = population[rng.below(population.size())];
        double dab = gower_distance(a, b, ranges);
        double dba = gower_distance(b, a, ranges);
        EXPECT_EQ(dab, dba);
        EXPECT_GE(dab, 0.0);
        EXPECT_LE(dab, 1.0);
        EXPECT_EQ(gower_distance(a, a, ranges), 0.0);
    }
}

TEST(Gower, ZeroRangeFeaturesExcludedFromDenominator) {
    FeatureVector a, b;
    a.values.fill(0.0);
    b.values.fill(0.0);
    a.values[F_RevenueTotal] = 100.0;
    b.values[F_RevenueTotal] = 300.0;
    FeatureRanges ranges;
    ranges.r[F_RevenueTotal] = 400.0;
    // one contributing feature: |100-300|/400 = 0.5, denominator 1
    EXPECT_DOUBLE_EQ(gower_distance(a, b, ranges), 0.5);
    // fully constant space: distance defined as 0
    FeatureRanges none;
    EXPECT_DOUBLE_EQ(gower_distance(a, b, none), 0.0);
}

TEST(Gower, OutOfRangeQueryTermsClampToOne) {
    FeatureVector a, b;
    a.values.fill(0.0);
    b.values.fill(0.0);
    b.values[F_RepeatTotal] = 50.0;  // far outside the recorded range
    FeatureRanges ranges;
    ranges.r[F_RepeatTotal] = 5.0;
    EXPECT_DOUBLE_EQ(gower_distance(a, b, ranges), 1.0);
}

TEST(DistanceMatrix, MatchesPairRecomputation) {
    Rng rng(4);
    std::vector<FeatureVector> population;
    for (int i = 0; i < 50; ++i) population.push_back(random_vector(rng, "p" + std::to_string(i)));
    DistanceMatrix m = distance_matrix(population);
    ASSERT_EQ(m.n, 50u);
    ASSERT_EQ(m.d.size(), 50u * 49u / 2u);

    // Independent per-pair recomputation of a random sample of entries.
    for (int it = 0; it < 500; ++it) {
        std::size_t i = rng.below(50);
        std::size_t j = rng.below(50);
        if (i == j) continue;
        double expect = 0.0;
        int contributing = 0;
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            if (m.ranges.r[f] <= 0.0) continue;
            ++contributing;
            expect += std::min(1.0, std::fabs(population[i].values[f] - population[j].values[f]) / m.ranges.r[f]);
        }
        expect /= contributing;
        EXPECT_NEAR(m.at(i, j), expect, 1e-6);  // float storage
        EXPECT_EQ(m.at(i, j), m.at(j, i));
        EXPECT_GE(m.at(i, j), 0.0);
        EXPECT_LE(m.at(i, j), 1.0);
    }
    for (std::size_t i = 0; i < m.n; ++i) EXPECT_EQ(m.at(i, i), 0.0);
}

TEST(DistanceMatrix, IdenticalVectorsGiveZeroMatrix) {
    Rng rng(5);
    FeatureVector v = random_vector(rng, "v");
    std::vector<FeatureVector> population(8, v);
    DistanceMatrix m = distance_matrix(population);
    for (float d : m.d) EXPECT_EQ(d, 0.0f);
}

TEST(DistanceMatrix, TwoVectorsSingleEntry) {
    Rng rng(6);
    std::vector<FeatureVector> population = {random_vector(rng, "a"), random_vector(rng, "b")};
    DistanceMatrix m = distance_matrix(population);
    ASSERT_EQ(m.d.size(), 1u);
    EXPECT_FLOAT_EQ(static_cast<float>(m.at(0, 1)),
                    static_cast<float>(gower_distance(population[0], population[1], m.ranges)));
}

TEST(DistanceMatrix, ThreadCountDoesNotChangeResult) {
    Rng rng(7);
    std::vector<FeatureVector> population;
    for (int i = 0; i < 300; ++i) population.push_back(random_vector(rng, "p" + std::to_string(i)));
    DistanceMatrix serial = distance_matrix(population, 1);
    DistanceMatrix parallel = distance_matrix(population, 4);
    EXPECT_EQ(serial.d, parallel.d);
}
