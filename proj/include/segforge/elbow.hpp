#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segforge/csv.hpp"
#include "segforge/errors.hpp"

namespace segforge {

// One row of the elbow table. The criterion is the within-cluster
// dispersion at k normalized by its value at k = 1, so it starts at 1 and
// decays. Differences are stored in drop form: d1_k = c_{k-1} - c_k and
// d2_k = d1_{k-1} - d1_k, matching the exported trial-table layout. Cells that
// need unavailable neighbours stay unset (rendered "-"): d1 at k=1, d2 and
// the elbow columns at k<=2.
struct ElbowRow {
    int k = 0;
    double criterion = 0.0;
    std::optional<double> d1;
    std::optional<double> d2;
    std::optional<int> elbow;         // 1 iff d2_{k+1} > d1_{k+1}
    std::optional<double> strength;   // (d2_{k+1} - d1_{k+1}) / k at elbows, else 0
};

struct ElbowTable {
    std::vector<ElbowRow> rows;
    bool monotone_warning = false;  // criterion increased somewhere
};

// Builds the differences, elbow flags and relative strengths from a
// criterion series c_1..c_K. The strength is damped by k so late elbows
// need a proportionally sharper bend to win. No elbow can be flagged at
// K itself (its forward differences do not exist).
inline ElbowTable elbow_table(std::span<const double> criterion) {
    const std::size_t kmax = criterion.size();
    if (kmax < 3) throw model_error("InvalidConfig", "elbow table needs a criterion series with at least 3 values");
    if (std::fabs(criterion[0] - 1.0) > 1e-9)
        throw model_error("InvalidCriterion", "criterion must start at 1 for k = 1");

    ElbowTable table;
    table.rows.resize(kmax);
    for (std::size_t i = 0; i < kmax; ++i) {
        table.rows[i].k = static_cast<int>(i + 1);
        table.rows[i].criterion = criterion[i];
        if (i > 0 && criterion[i] > criterion[i - 1] + 1e-12) table.monotone_warning = true;
    }
    for (std::size_t i = 1; i < kmax; ++i) table.rows[i].d1 = criterion[i - 1] - criterion[i];
    for (std::size_t i = 2; i < kmax; ++i) table.rows[i].d2 = *table.rows[i - 1].d1 - *table.rows[i].d1;

    for (std::size_t i = 2; i < kmax; ++i) {
        ElbowRow& row = table.rows[i];
        if (i + 1 < kmax) {
            double d1_next = *table.rows[i + 1].d1;
            double d2_next = *table.rows[i + 1].d2;
            bool is_elbow = d2_next > d1_next;
            row.elbow = is_elbow ? 1 : 0;
            row.strength = is_elbow ? (d2_next - d1_next) / static_cast<double>(row.k) : 0.0;
        } else {
            row.elbow = 0;  // last row, no forward differences
            row.strength = 0.0;
        }
    }
    return table;
}

// The k with the highest relative strength; ties go to the smaller k.
inline int optimal_k(const ElbowTable& table) {
    int best_k = 0;
    double best_strength = 0.0;
    for (const auto& row : table.rows) {
        if (!row.strength) continue;
        if (*row.strength > best_strength) {
            best_strength = *row.strength;
            best_k = row.k;
        }
    }
    if (best_k == 0) throw model_error("NoElbowFound", "no cluster number has positive relative strength");
    return best_k;
}

inline void write_elbow_csv(const std::filesystem::path& path, const ElbowTable& table) {
    auto cell = [](const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string("-"); };
    std::vector<std::vector<std::string>> rows;
    rows.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        rows.push_back({std::to_string(r.k), csv::format_number(r.criterion), cell(r.d1), cell(r.d2),
                        r.elbow ? std::to_string(*r.elbow) : std::string("-"), cell(r.strength)});
    }
    csv::write_file(path,
                    {"cluster", "criterion", "first_order_difference", "second_order_difference", "elbow_binary",
                     "relative_strength"},
                    rows);
}

}  // namespace segforge
