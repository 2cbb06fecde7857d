#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

#include "segforge/errors.hpp"
#include "segforge/features.hpp"

namespace segforge {

// Observed per-feature ranges of a population. A zero range means the
// feature is constant there and contributes nothing to distances (it is
// excluded from the denominator as well). For binary features the range
// is 1 when both states occur, so the term reduces to a plain mismatch
// indicator.
struct FeatureRanges {
    std::array<double, kFeatureCount> r{};

    int contributing() const {
        int f = 0;
        for (double x : r)
            if (x > 0.0) ++f;
        return f;
    }
};

inline FeatureRanges compute_ranges(std::span<const FeatureVector> vectors) {
    FeatureRanges ranges;
    if (vectors.empty()) return ranges;
    std::array<double, kFeatureCount> lo = vectors[0].values;
    std::array<double, kFeatureCount> hi = vectors[0].values;
    for (const auto& v : vectors) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            lo[f] = std::min(lo[f], v.values[f]);
            hi[f] = std::max(hi[f], v.values[f]);
        }
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) ranges.r[f] = hi[f] - lo[f];
    return ranges;
}

// Mean of per-feature dissimilarity terms over the contributing features:
// |a-b|/range for scaled features, mismatch for binaries. Terms are
// clamped at 1 so queries from outside the range-defining population still
// produce distances in [0, 1].
inline double gower_distance(const std::array<double, kFeatureCount>& a,
                             const std::array<double, kFeatureCount>& b, const FeatureRanges& ranges) {
    double sum = 0.0;
    int contributing = 0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        double range = ranges.r[f];
        if (range <= 0.0) continue;
        ++contributing;
        double term = std::fabs(a[f] - b[f]) / range;
        sum += term < 1.0 ? term : 1.0;
    }
    if (contributing == 0) return 0.0;
    return sum / static_cast<double>(contributing);
}

inline double gower_distance(const FeatureVector& a, const FeatureVector& b, const FeatureRanges& ranges) {
    return gower_distance(a.values, b.values, ranges);
}

// Condensed upper-triangular matrix of all pairwise dissimilarities,
// stored as float (n is bounded by the trial sample size, so the matrix
// dominates memory).
struct DistanceMatrix {
    std::size_t n = 0;
    std::vector<float> d;
    FeatureRanges ranges;

    static std::size_t condensed_size(std::size_t n) { return n * (n - 1) / 2; }

    std::size_t index(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        return n * i - i * (i + 1) / 2 + (j - i - 1);
    }

    double at(std::size_t i, std::size_t j) const {
        if (i == j) return 0.0;
        return static_cast<double>(d[index(i, j)]);
    }
};

// Fills the matrix row-block parallel; entries are independent so the
// result is identical at any thread count.
inline DistanceMatrix distance_matrix(std::span<const FeatureVector> vectors, int threads = 1) {
    if (vectors.size() < 2) throw data_error("EmptyPopulation", "distance matrix needs at least two vectors");
    DistanceMatrix m;
    m.n = vectors.size();
    m.ranges = compute_ranges(vectors);
    m.d.assign(DistanceMatrix::condensed_size(m.n), 0.0f);

    auto fill_rows = [&](std::size_t row_begin, std::size_t row_end) {
        for (std::size_t i = row_begin; i < row_end; ++i) {
            if (i + 1 >= m.n) continue;
            std::size_t k = m.index(i, i + 1);
            for (std::size_t j = i + 1; j < m.n; ++j)
                m.d[k++] = static_cast<float>(gower_distance(vectors[i], vectors[j], m.ranges));
        }
    };

    if (threads <= 1 || m.n < 256) {
        fill_rows(0, m.n);
        return m;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (m.n + static_cast<std::size_t>(threads) - 1) / static_cast<std::size_t>(threads);
    for (int t = 0; t < threads; ++t) {
        std::size_t lo = static_cast<std::size_t>(t) * chunk;
        std::size_t hi = std::min(m.n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(fill_rows, lo, hi);
    }
    for (auto& th : pool) th.join();
    return m;
}

}  // namespace segforge
