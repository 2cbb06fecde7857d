#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
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

// Segment labels of every cohort member at one evaluation date. The
// cohort is every golden profile with at least one reservation arriving
// strictly before the timestamp; features are rebuilt as of that date and
// reduced with the training model's frozen caps so all snapshots live in
// one comparable space.
struct SnapshotAssignment {
    Date timestamp;
    int model_k = 0;
    std::vector<FeatureVector> features;  // reduced, sorted by golden_id
    std::vector<int> labels;              // parallel to features
    std::unordered_map<std::string, std::size_t> index;

    std::size_t cohort_size() const { return features.size(); }

    std::vector<std::int64_t> segment_counts() const {
        std::vector<std::int64_t> counts(static_cast<std::size_t>(model_k) + 1, 0);
        for (int label : labels) counts[static_cast<std::size_t>(label)] += 1;
        return counts;
    }
};

// Optional inactivity stream: profiles whose latest arrival is older than
// the horizon move to an extra synthetic segment (label k+1).
struct OutflowRule {
    bool enabled = false;
    int years = 3;
};

inline SnapshotAssignment snapshot(const Dataset& ds, const GoldenMap& golden_map, const SegmentModel& model,
                                   Date t, int threads = 1, const OutflowRule& outflow = {}) {
    if (model.trained_at < t)
        throw model_error("ModelMismatch", "snapshot at " + t.to_string() + " is past the training date " +
                                               model.trained_at.to_string());
    SnapshotAssignment snap;
    snap.timestamp = t;
    snap.model_k = model.k + (outflow.enabled ? 1 : 0);
    snap.features = build_features(ds, golden_map, t);  // throws EmptyCohort when empty
    apply_reduction(snap.features, model.caps);
    snap.labels = propagate_1nn(model, snap.features, threads);

    if (outflow.enabled) {
        std::unordered_map<std::string, Date> last_arrival;
        auto golden_of = [&](const std::string& pid) {
            auto it = golden_map.find(pid);
            return it == golden_map.end() ? pid : it->second;
        };
        for (const auto& r : ds.reservations) {
            if (!(r.arrival_date < t)) continue;
            auto [it, inserted] = last_arrival.emplace(golden_of(r.profile_id), r.arrival_date);
            if (!inserted && it->second < r.arrival_date) it->second = r.arrival_date;
        }
        Date horizon = t.add_days(-365LL * outflow.years);
        for (std::size_t i = 0; i < snap.features.size(); ++i) {
            auto it = last_arrival.find(snap.features[i].golden_id);
            if (it != last_arrival.end() && it->second < horizon) snap.labels[i] = model.k + 1;
        }
    }

    snap.index.reserve(snap.features.size());
    for (std::size_t i = 0; i < snap.features.size(); ++i) snap.index.emplace(snap.features[i].golden_id, i);
    return snap;
}

// Flow counts between two snapshots. Row 0 is the New-Guests stream:
// profiles present at the later date but absent from the earlier cohort.
// Existing profiles never leave, so row sums over segments reproduce the
// earlier counts and the bookkeeping identity
// |cohort(t2)| = |cohort(t1)| + new_guests holds exactly.
struct TransitionTable {
    Date from_timestamp;
    Date to_timestamp;
    int k = 0;                                        // segment count
    std::vector<std::vector<std::int64_t>> counts;    // [from 0..k][to 1..k], index 0 = NewGuests
    std::int64_t from_total = 0;
    std::int64_t to_total = 0;
    std::int64_t new_guests = 0;
};

inline TransitionTable transitions(const SnapshotAssignment& s1, const SnapshotAssignment& s2) {
    if (!(s1.timestamp < s2.timestamp))
        throw model_error("ModelMismatch", "transition timestamps must be increasing");
    if (s1.model_k != s2.model_k)
        throw model_error("ModelMismatch", "snapshots come from different models");

    TransitionTable table;
    table.from_timestamp = s1.timestamp;
    table.to_timestamp = s2.timestamp;
    table.k = s1.model_k;
    table.counts.assign(static_cast<std::size_t>(table.k) + 1,
                        std::vector<std::int64_t>(static_cast<std::size_t>(table.k) + 1, 0));
    table.from_total = static_cast<std::int64_t>(s1.cohort_size());
    table.to_total = static_cast<std::int64_t>(s2.cohort_size());

    for (std::size_t i = 0; i < s2.features.size(); ++i) {
        int to_label = s2.labels[i];
        auto it = s1.index.find(s2.features[i].golden_id);
        if (it == s1.index.end()) {
            table.counts[0][static_cast<std::size_t>(to_label)] += 1;
            table.new_guests += 1;
        } else {
            int from_label = s1.labels[it->second];
            table.counts[static_cast<std::size_t>(from_label)][static_cast<std::size_t>(to_label)] += 1;
        }
    }
    return table;
}

// Mean per-feature change over the profiles that moved from one segment
// to another between two snapshots. Revenue features additionally carry
// the relative change of the group mean (absent when the earlier mean is
// zero). Deltas are computed on the model's reduced feature space.
struct TransitionExplanation {
    int from_segment = 0;
    int to_segment = 0;
    std::int64_t movers = 0;
    std::array<double, kFeatureCount> mean_delta{};
    std::array<std::optional<double>, kFeatureCount> revenue_pct_change{};
};

inline TransitionExplanation explain(int from_segment, int to_segment, const SnapshotAssignment& s1,
                                     const SnapshotAssignment& s2) {
    TransitionExplanation out;
    out.from_segment = from_segment;
    out.to_segment = to_segment;
    std::array<double, kFeatureCount> before{};
    std::array<double, kFeatureCount> after{};
    for (std::size_t i = 0; i < s2.features.size(); ++i) {
        if (s2.labels[i] != to_segment) continue;
        auto it = s1.index.find(s2.features[i].golden_id);
        if (it == s1.index.end() || s1.labels[it->second] != from_segment) continue;
        ++out.movers;
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            before[f] += s1.features[it->second].values[f];
            after[f] += s2.features[i].values[f];
        }
    }
    if (out.movers == 0)
        throw model_error("EmptyTransition", "no profile moved from segment " + std::to_string(from_segment) +
                                                 " to " + std::to_string(to_segment));
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        double n = static_cast<double>(out.movers);
        out.mean_delta[f] = (after[f] - before[f]) / n;
        if (kFeatureSchema[f].kind == FeatureKind::Revenue && before[f] != 0.0)
            out.revenue_pct_change[f] = 100.0 * (after[f] - before[f]) / before[f];
    }
    return out;
}

// --- exports ---------------------------------------------------------------

inline std::string segment_display_name(const SegmentModel& model, int label, const OutflowRule& outflow = {}) {
    if (label == 0) return "NewGuests";
    if (outflow.enabled && label == model.k + 1) return "Outflow";
    return model.name_of(label);
}

// Sankey-ready node/link document. Every non-zero flow is retained; the
// displayed flag marks flows whose share of the destination cohort
// reaches the threshold.
inline nlohmann::json flow_export(const std::vector<SnapshotAssignment>& snapshots,
                                  const std::vector<TransitionTable>& tables, const SegmentModel& model,
                                  double threshold, const OutflowRule& outflow = {}) {
    nlohmann::json doc;
    doc["threshold"] = threshold;
    doc["nodes"] = nlohmann::json::array();
    doc["links"] = nlohmann::json::array();

    for (const auto& snap : snapshots) {
        auto counts = snap.segment_counts();
        for (int label = 1; label <= snap.model_k; ++label) {
            nlohmann::json node;
            node["timestamp"] = snap.timestamp.to_string();
            node["segment"] = segment_display_name(model, label, outflow);
            node["count"] = counts[static_cast<std::size_t>(label)];
            doc["nodes"].push_back(std::move(node));
        }
    }
    for (const auto& table : tables) {
        nlohmann::json node;
        node["timestamp"] = table.from_timestamp.to_string();
        node["segment"] = "NewGuests";
        node["count"] = table.new_guests;
        doc["nodes"].push_back(std::move(node));
    }

    for (const auto& table : tables) {
        for (int from = 0; from <= table.k; ++from) {
            for (int to = 1; to <= table.k; ++to) {
                std::int64_t count = table.counts[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
                if (count == 0) continue;
                double share = table.to_total > 0
                                   ? static_cast<double>(count) / static_cast<double>(table.to_total)
                                   : 0.0;
                nlohmann::json link;
                link["from_timestamp"] = table.from_timestamp.to_string();
                link["from_segment"] = segment_display_name(model, from, outflow);
                link["to_timestamp"] = table.to_timestamp.to_string();
                link["to_segment"] = segment_display_name(model, to, outflow);
                link["count"] = count;
                link["share"] = share;
                link["displayed"] = share >= threshold;
                doc["links"].push_back(std::move(link));
            }
        }
    }
    return doc;
}

inline void write_flows_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("WriteFailed", "cannot write " + path.string());
    out << doc.dump(2) << "\n";
}

inline void write_transitions_csv(const std::filesystem::path& path, const std::vector<TransitionTable>& tables,
                                  const SegmentModel& model, const OutflowRule& outflow = {}) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& table : tables) {
        for (int from = 0; from <= table.k; ++from)
            for (int to = 1; to <= table.k; ++to) {
                std::int64_t count = table.counts[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
                if (count == 0) continue;
                rows.push_back({table.from_timestamp.to_string(), table.to_timestamp.to_string(),
                                segment_display_name(model, from, outflow),
                                segment_display_name(model, to, outflow), std::to_string(count)});
            }
    }
    csv::write_file(path, {"from_timestamp", "to_timestamp", "from_segment", "to_segment", "count"}, rows);
}

inline nlohmann::json explanation_to_json(const TransitionExplanation& e, const SegmentModel& model,
                                          const OutflowRule& outflow = {}) {
    nlohmann::json j;
    j["from_segment"] = segment_display_name(model, e.from_segment, outflow);
    j["to_segment"] = segment_display_name(model, e.to_segment, outflow);
    j["movers"] = e.movers;
    nlohmann::json deltas = nlohmann::json::object();
    for (std::size_t f = 0; f < kFeatureCount; ++f) deltas[kFeatureSchema[f].name] = e.mean_delta[f];
    j["mean_delta"] = deltas;
    nlohmann::json pct = nlohmann::json::object();
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        if (kFeatureSchema[f].kind != FeatureKind::Revenue) continue;
        if (e.revenue_pct_change[f])
            pct[kFeatureSchema[f].name] = *e.revenue_pct_change[f];
        else
            pct[kFeatureSchema[f].name] = nullptr;
    }
    j["revenue_pct_change"] = pct;
    return j;
}

}  // namespace segforge
