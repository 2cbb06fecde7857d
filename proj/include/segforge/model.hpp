#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "segforge/csv.hpp"
#include "segforge/date.hpp"
#include "segforge/elbow.hpp"
#include "segforge/errors.hpp"
#include "segforge/features.hpp"
#include "segforge/gower.hpp"
#include "segforge/rng.hpp"
#include "segforge/ward.hpp"

namespace segforge {

// Labelled exemplar set from the chosen trial, plus everything needed to
// reproduce its feature space later: the reduction caps of the training
// population and the dissimilarity ranges of the trial sample.
struct SegmentModel {
    int k = 0;
    Date trained_at;
    std::uint64_t seed = 0;
    int trial_index = -1;
    FeatureRanges ranges;
    ReductionCaps caps;
    std::vector<std::string> exemplar_ids;                 // sorted ascending
    std::vector<std::array<double, kFeatureCount>> exemplar_values;
    std::vector<int> exemplar_labels;                      // 1..k
    std::map<int, std::string> segment_names;              // optional display names

    std::string name_of(int label) const {
        auto it = segment_names.find(label);
        return it != segment_names.end() ? it->second : "S" + std::to_string(label);
    }
};

struct TrialParams {
    int trial_count = 15;
    std::size_t sample_size = 10000;
    int k_max = 20;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct TrialOutcome {
    int index = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> sample;   // population indexes, ascending
    ElbowTable table;
    int optimal = 0;                   // 0 = no elbow found
    std::string failure;               // non-empty when the trial cast no vote
    ClusterAssignment assignment;      // at optimal k (empty when failed)
    Dendrogram dendrogram;
    FeatureRanges ranges;
    double elapsed_ms = 0.0;
};

enum class Stability { ExtremelyStable, Stable, Unstable };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::ExtremelyStable: return "extremely_stable";
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
    }
    return "?";
}

// Vote histogram over trials. Key 0 collects trials that found no elbow,
// so the counts always add up to the trial count.
struct StabilityVerdict {
    std::map<int, int> votes;
    int mode_k = 0;
    Stability stability = Stability::Unstable;
};

namespace detail {

inline TrialOutcome run_single_trial(std::span<const FeatureVector> population, const TrialParams& params,
                                     int index) {
    auto t0 = std::chrono::steady_clock::now();
    TrialOutcome outcome;
    outcome.index = index;
    outcome.seed = params.seed + static_cast<std::uint64_t>(index);

    Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(index)));
    outcome.sample = sample_without_replacement(population.size(), params.sample_size, rng);

    std::vector<FeatureVector> sample_vectors;
    sample_vectors.reserve(outcome.sample.size());
    for (std::size_t idx : outcome.sample) sample_vectors.push_back(population[idx]);

    int k_max = std::min<int>(params.k_max, static_cast<int>(sample_vectors.size()));
    DistanceMatrix matrix = distance_matrix(sample_vectors);
    outcome.ranges = matrix.ranges;
    outcome.dendrogram = ward_cluster(matrix);
    const Dendrogram& dendro = outcome.dendrogram;

    std::vector<double> criterion;
    std::vector<ClusterAssignment> cuts;
    criterion.reserve(static_cast<std::size_t>(k_max));
    cuts.reserve(static_cast<std::size_t>(k_max));
    for (int k = 1; k <= k_max; ++k) {
        cuts.push_back(cut(dendro, k));
        criterion.push_back(within_dispersion(matrix, cuts.back()));
    }
    double w1 = criterion[0];
    if (w1 <= 0.0) {
        outcome.failure = "degenerate sample: zero dispersion at k = 1";
        auto t1 = std::chrono::steady_clock::now();
        outcome.elapsed_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        return outcome;
    }
    for (double& c : criterion) c /= w1;

    outcome.table = elbow_table(criterion);
    try {
        outcome.optimal = optimal_k(outcome.table);
        outcome.assignment = std::move(cuts[static_cast<std::size_t>(outcome.optimal - 1)]);
    } catch (const Error& e) {
        outcome.failure = e.what();
    }
    auto t1 = std::chrono::steady_clock::now();
    outcome.elapsed_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return outcome;
}

}  // namespace detail

struct TrialsResult {
    std::vector<TrialOutcome> trials;
    StabilityVerdict verdict;
};

// The sampling / clustering / elbow protocol over seeded trials. Trials
// are independent (per-trial seed = seed + index) and may run in
// parallel; outputs land in trial order, so results do not depend on the
// thread count.
inline TrialsResult run_trials(std::span<const FeatureVector> population, const TrialParams& params) {
    if (params.trial_count < 1) throw config_error("InvalidConfig", "trial count must be positive");
    if (params.k_max < 3) throw config_error("InvalidConfig", "k_max must be at least 3");
    if (population.size() < 2) throw data_error("EmptyCohort", "population too small for trials");

    if (params.sample_size > population.size())
        std::fprintf(stderr, "segforge: sample size %zu exceeds population %zu, using every vector per trial\n",
                     params.sample_size, population.size());

    TrialsResult result;
    result.trials.resize(static_cast<std::size_t>(params.trial_count));

    int threads = std::max(1, params.threads);
    if (threads == 1) {
        for (int i = 0; i < params.trial_count; ++i)
            result.trials[static_cast<std::size_t>(i)] = detail::run_single_trial(population, params, i);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mu;
        auto worker = [&] {
            for (;;) {
                std::size_t i;
                {
                    std::lock_guard<std::mutex> lock(mu);
                    if (next >= result.trials.size()) return;
                    i = next++;
                }
                result.trials[i] = detail::run_single_trial(population, params, static_cast<int>(i));
            }
        };
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    StabilityVerdict& verdict = result.verdict;
    for (const auto& trial : result.trials) verdict.votes[trial.optimal] += 1;
    int mode_count = 0;
    for (const auto& [k, count] : verdict.votes) {
        if (k == 0) continue;
        if (count > mode_count) {  // map iterates ascending, ties keep smaller k
            mode_count = count;
            verdict.mode_k = k;
        }
    }
    if (verdict.mode_k == 0) throw model_error("NoElbowFound", "no trial produced an optimal cluster number");
    if (mode_count == params.trial_count)
        verdict.stability = Stability::ExtremelyStable;
    else if (mode_count * 2 >= params.trial_count)
        verdict.stability = Stability::Stable;
    else
        verdict.stability = Stability::Unstable;
    return result;
}

// Exemplar set = the trial with the smallest seed among those whose
// optimum equals the mode.
inline SegmentModel build_model(const TrialsResult& result, std::span<const FeatureVector> population,
                                const ReductionCaps& caps, Date trained_at, std::uint64_t seed,
                                const std::map<int, std::string>& segment_names = {}) {
    const TrialOutcome* chosen = nullptr;
    for (const auto& trial : result.trials) {
        if (trial.optimal == result.verdict.mode_k) {
            chosen = &trial;
            break;  // trials are seed-ordered
        }
    }
    if (!chosen) throw model_error("NoElbowFound", "no trial matches the mode cluster number");

    SegmentModel model;
    model.k = result.verdict.mode_k;
    model.trained_at = trained_at;
    model.seed = seed;
    model.trial_index = chosen->index;
    model.ranges = chosen->ranges;
    model.caps = caps;
    model.segment_names = segment_names;
    // Exemplars sorted by golden id so tie-breaking in 1-NN queries is
    // well defined regardless of population order.
    std::vector<std::size_t> order(chosen->sample.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return population[chosen->sample[a]].golden_id < population[chosen->sample[b]].golden_id;
    });
    model.exemplar_ids.reserve(order.size());
    for (std::size_t s : order) {
        const FeatureVector& v = population[chosen->sample[s]];
        model.exemplar_ids.push_back(v.golden_id);
        model.exemplar_values.push_back(v.values);
        model.exemplar_labels.push_back(chosen->assignment.labels[s]);
    }
    return model;
}

// Nearest-exemplar classification of arbitrary vectors in the model's
// Gower space. A query that IS an exemplar (same golden id) keeps that
// exemplar's label; other distance ties go to the smallest exemplar id.
inline std::vector<int> propagate_1nn(const SegmentModel& model, std::span<const FeatureVector> vectors,
                                      int threads = 1) {
    if (model.exemplar_ids.empty()) throw model_error("SchemaMismatch", "model has no exemplars");
    std::unordered_map<std::string, int> exemplar_label;
    exemplar_label.reserve(model.exemplar_ids.size());
    for (std::size_t e = 0; e < model.exemplar_ids.size(); ++e)
        exemplar_label.emplace(model.exemplar_ids[e], model.exemplar_labels[e]);

    std::vector<int> labels(vectors.size(), 0);
    auto classify_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t q = begin; q < end; ++q) {
            auto self = exemplar_label.find(vectors[q].golden_id);
            if (self != exemplar_label.end()) {
                labels[q] = self->second;
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            int best_label = 0;
            for (std::size_t e = 0; e < model.exemplar_values.size(); ++e) {
                double d = gower_distance(vectors[q].values, model.exemplar_values[e], model.ranges);
                if (d < best) {  // strict: first (smallest id) exemplar wins ties
                    best = d;
                    best_label = model.exemplar_labels[e];
                }
            }
            labels[q] = best_label;
        }
    };

    if (threads <= 1 || vectors.size() < 512) {
        classify_range(0, vectors.size());
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (vectors.size() + static_cast<std::size_t>(threads) - 1) / static_cast<std::size_t>(threads);
        for (int t = 0; t < threads; ++t) {
            std::size_t lo = static_cast<std::size_t>(t) * chunk;
            std::size_t hi = std::min(vectors.size(), lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(classify_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return labels;
}

// --- serialization ----------------------------------------------------------

inline nlohmann::json model_to_json(const SegmentModel& model) {
    nlohmann::json j;
    j["k"] = model.k;
    j["trained_at"] = model.trained_at.to_string();
    j["seed"] = model.seed;
    j["trial_index"] = model.trial_index;
    j["feature_names"] = nlohmann::json::array();
    for (const auto& def : kFeatureSchema) j["feature_names"].push_back(def.name);
    j["ranges"] = model.ranges.r;
    nlohmann::json caps = nlohmann::json::object();
    for (std::size_t f = 0; f < kFeatureCount; ++f)
        if (!std::isnan(model.caps.cap[f])) caps[kFeatureSchema[f].name] = model.caps.cap[f];
    j["reduction_caps"] = caps;
    nlohmann::json names = nlohmann::json::object();
    for (const auto& [label, name] : model.segment_names) names[std::to_string(label)] = name;
    j["segment_names"] = names;
    nlohmann::json exemplars = nlohmann::json::array();
    for (std::size_t e = 0; e < model.exemplar_ids.size(); ++e) {
        nlohmann::json row;
        row["golden_id"] = model.exemplar_ids[e];
        row["label"] = model.exemplar_labels[e];
        row["values"] = model.exemplar_values[e];
        exemplars.push_back(std::move(row));
    }
    j["exemplars"] = exemplars;
    return j;
}

inline SegmentModel model_from_json(const nlohmann::json& j) {
    SegmentModel model;
    model.k = j.at("k").get<int>();
    model.trained_at = Date::parse_or_throw(j.at("trained_at").get<std::string>(), "model.json");
    model.seed = j.at("seed").get<std::uint64_t>();
    model.trial_index = j.at("trial_index").get<int>();
    auto names = j.at("feature_names");
    if (names.size() != kFeatureCount) throw model_error("SchemaMismatch", "model feature schema mismatch");
    for (std::size_t f = 0; f < kFeatureCount; ++f)
        if (names[f].get<std::string>() != kFeatureSchema[f].name)
            throw model_error("SchemaMismatch", "model feature schema mismatch at column " + std::to_string(f));
    auto ranges = j.at("ranges");
    for (std::size_t f = 0; f < kFeatureCount; ++f) model.ranges.r[f] = ranges[f].get<double>();
    for (const auto& [name, value] : j.at("reduction_caps").items()) {
        for (std::size_t f = 0; f < kFeatureCount; ++f)
            if (name == kFeatureSchema[f].name) model.caps.cap[f] = value.get<double>();
    }
    for (const auto& [label, name] : j.at("segment_names").items())
        model.segment_names[std::stoi(label)] = name.get<std::string>();
    for (const auto& row : j.at("exemplars")) {
        model.exemplar_ids.push_back(row.at("golden_id").get<std::string>());
        model.exemplar_labels.push_back(row.at("label").get<int>());
        std::array<double, kFeatureCount> values{};
        auto vv = row.at("values");
        for (std::size_t f = 0; f < kFeatureCount; ++f) values[f] = vv[f].get<double>();
        model.exemplar_values.push_back(values);
    }
    return model;
}

inline void write_model_json(const std::filesystem::path& path, const SegmentModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("WriteFailed", "cannot write " + path.string());
    out << model_to_json(model).dump(2) << "\n";
}

inline SegmentModel read_model_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("MissingFile", "cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
}

inline void write_segments_csv(const std::filesystem::path& path, std::span<const FeatureVector> vectors,
                               std::span<const int> labels) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i)
        rows.push_back({vectors[i].golden_id, std::to_string(labels[i])});
    csv::write_file(path, {"golden_id", "cluster_label"}, rows);
}

}  // namespace segforge
