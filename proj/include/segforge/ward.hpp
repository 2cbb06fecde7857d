#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <vector>

#include "segforge/csv.hpp"
#include "segforge/errors.hpp"
#include "segforge/gower.hpp"

namespace segforge {

// One agglomerative merge. Node ids follow the usual convention: leaves
// are 0..n-1, the cluster created by merge step s is node n+s. Height is
// the Ward cost of the merge on squared dissimilarities.
struct Merge {
    int left = 0;
    int right = 0;
    double height = 0.0;
    int size = 0;
};

struct Dendrogram {
    std::size_t n = 0;
    std::vector<Merge> merges;  // n-1 entries, heights non-decreasing
};

struct ClusterAssignment {
    int k = 0;
    std::vector<int> labels;  // 1..k per vector index
};

// Lance-Williams update with Ward coefficients, applied to squared
// dissimilarities: the cost between the freshly merged (i u j) and any
// other cluster k from the three previous costs and the member counts.
inline double ward_update(double n_i, double n_j, double n_k, double d_ik, double d_jk, double d_ij) {
    double s = n_i + n_j + n_k;
    return ((n_i + n_k) * d_ik + (n_j + n_k) * d_jk - n_k * d_ij) / s;
}

// Agglomerative clustering: start from singletons, repeatedly merge the
// pair with the lowest Ward cost. Cost ties break toward the
// lexicographically smallest slot pair, which equals the smallest pair of
// minimum original member indexes because unions collapse into the lower
// slot. Per-row nearest caches keep the loop near O(n^2).
inline Dendrogram ward_cluster(const DistanceMatrix& matrix) {
    const std::size_t n = matrix.n;
    Dendrogram dendro;
    dendro.n = n;
    if (n < 2) return dendro;

    // Working matrix of current inter-cluster Ward costs, initialized with
    // squared input dissimilarities. Indexed like the condensed input.
    std::vector<double> cost(DistanceMatrix::condensed_size(n));
    for (std::size_t idx = 0; idx < cost.size(); ++idx) {
        double d = static_cast<double>(matrix.d[idx]);
        cost[idx] = d * d;
    }
    auto at = [&](std::size_t i, std::size_t j) -> double& { return cost[matrix.index(i, j)]; };

    std::vector<bool> active(n, true);
    std::vector<double> size(n, 1.0);
    std::vector<int> node_id(n);
    std::iota(node_id.begin(), node_id.end(), 0);

    // best[i] = partner j > i with the lowest cost in row i (smallest j on
    // ties); dirty rows are rescanned before they can win.
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best(n, 0);
    std::vector<double> best_cost(n, kInf);
    std::vector<bool> dirty(n, false);

    auto rescan = [&](std::size_t i) {
        best_cost[i] = kInf;
        best[i] = i;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!active[j]) continue;
            double c = at(i, j);
            if (c < best_cost[i]) {
                best_cost[i] = c;
                best[i] = j;
            }
        }
        dirty[i] = false;
    };
    for (std::size_t i = 0; i + 1 < n; ++i) rescan(i);
    if (n >= 1) {
        best_cost[n - 1] = kInf;
        dirty[n - 1] = false;
    }

    dendro.merges.reserve(n - 1);
    for (std::size_t step = 0; step + 1 < n; ++step) {
        // Global minimum over row caches; rescan dirty rows on the way.
        std::size_t merge_i = n, merge_j = n;
        double merge_cost = kInf;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            if (dirty[i]) rescan(i);
            if (best_cost[i] < merge_cost) {
                merge_cost = best_cost[i];
                merge_i = i;
                merge_j = best[i];
            }
        }

        const std::size_t i = merge_i, j = merge_j;  // i < j
        const double d_ij = merge_cost;
        const double n_i = size[i], n_j = size[j];

        // Update costs from the union (kept in slot i) to every other
        // active cluster, maintaining the row caches.
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == i || k == j) continue;
            double d_ik = at(std::min(i, k), std::max(i, k));
            double d_jk = at(std::min(j, k), std::max(j, k));
            double updated = ward_update(n_i, n_j, size[k], d_ik, d_jk, d_ij);
            at(std::min(i, k), std::max(i, k)) = updated;
            if (k < i) {
                if (updated < best_cost[k] || (updated == best_cost[k] && i < best[k])) {
                    best_cost[k] = updated;
                    best[k] = i;
                } else if (best[k] == i || best[k] == j) {
                    dirty[k] = true;
                }
            }
            if (k > i && k < j && best[k] == j) dirty[k] = true;
        }

        active[j] = false;
        size[i] = n_i + n_j;
        int left = std::min(node_id[i], node_id[j]);
        int right = std::max(node_id[i], node_id[j]);
        dendro.merges.push_back({left, right, d_ij, static_cast<int>(size[i])});
        node_id[i] = static_cast<int>(n + step);

        dirty[i] = true;  // row i holds fresh costs, rescan before use
    }
    return dendro;
}

// Partition obtained by undoing the last k-1 merges. Labels 1..k are
// assigned in order of each cluster's smallest member index, so the same
// data always yields the same labelling.
inline ClusterAssignment cut(const Dendrogram& dendro, int k) {
    const std::size_t n = dendro.n;
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw model_error("KOutOfRange", "cannot cut " + std::to_string(n) + " points into " + std::to_string(k) +
                                             " clusters");

    // Union leaves over the first n-k merges.
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    // node id -> smallest leaf inside it
    std::vector<std::size_t> node_leaf(n + dendro.merges.size());
    std::iota(node_leaf.begin(), node_leaf.begin() + static_cast<std::ptrdiff_t>(n), std::size_t{0});
    std::size_t take = n - static_cast<std::size_t>(k);
    for (std::size_t s = 0; s < take; ++s) {
        const Merge& m = dendro.merges[s];
        std::size_t a = node_leaf[static_cast<std::size_t>(m.left)];
        std::size_t b = node_leaf[static_cast<std::size_t>(m.right)];
        std::size_t ra = find(a), rb = find(b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
        node_leaf[n + s] = std::min(a, b);
    }

    ClusterAssignment out;
    out.k = k;
    out.labels.assign(n, 0);
    int next_label = 0;
    std::vector<int> root_label(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = find(i);
        if (root_label[r] == 0) root_label[r] = ++next_label;  // roots appear in min-member order
        out.labels[i] = root_label[r];
    }
    return out;
}

// Within-cluster dispersion: sum over clusters of the mean squared
// pairwise dissimilarity, (1/n_c) * sum_{i<j in c} d_ij^2. Defined purely
// from pairwise distances so it works for non-Euclidean dissimilarities;
// equals the classic within-cluster sum of squares in the Euclidean case.
inline double within_dispersion(const DistanceMatrix& matrix, const ClusterAssignment& assignment) {
    if (assignment.labels.size() != matrix.n)
        throw model_error("MismatchedSchema", "assignment size does not match distance matrix");
    std::vector<std::vector<std::size_t>> clusters(static_cast<std::size_t>(assignment.k));
    for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
        int label = assignment.labels[i];
        if (label < 1 || label > assignment.k)
            throw model_error("MismatchedSchema", "label " + std::to_string(label) + " outside 1.." +
                                                      std::to_string(assignment.k));
        clusters[static_cast<std::size_t>(label - 1)].push_back(i);
    }
    double total = 0.0;
    for (const auto& members : clusters) {
        if (members.size() < 2) continue;
        double ss = 0.0;
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                double d = matrix.at(members[a], members[b]);
                ss += d * d;
            }
        total += ss / static_cast<double>(members.size());
    }
    return total;
}

inline void write_merges_csv(const std::filesystem::path& path, const Dendrogram& dendro) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(dendro.merges.size());
    for (std::size_t s = 0; s < dendro.merges.size(); ++s) {
        const Merge& m = dendro.merges[s];
        rows.push_back({std::to_string(s), std::to_string(m.left), std::to_string(m.right),
                        csv::format_number(m.height), std::to_string(m.size)});
    }
    csv::write_file(path, {"step", "left", "right", "height", "size"}, rows);
}

}  // namespace segforge
