#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace segforge {

// All randomness in the project flows through this wrapper around
// mt19937_64 raw draws. The standard distributions are implementation
// defined, so uniform/normal/weighted draws are derived here by hand to
// keep outputs reproducible across compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // Uniform in [0, 1).
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n) by rejection, bias-free.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }

    // Uniform integer in [lo, hi].
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    bool chance(double p) { return u01() < p; }

    // Index draw proportional to the given non-negative weights.
    std::size_t pick_weighted(std::span<const double> weights) {
        double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        double x = u01() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (x < acc) return i;
        }
        return weights.size() - 1;
    }

    // Box-Muller. Two raw draws per call, no cached spare.
    double normal() {
        double u1 = 1.0 - u01();  // (0, 1]
        double u2 = u01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::mt19937_64 eng_;
};

// Mixes a stream index into a base seed; used to derive independent
// per-profile / per-trial substreams so adding items never shifts the
// draws of existing ones.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// k distinct indices from [0, n), returned sorted ascending.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    if (k > n) k = n;
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace segforge
