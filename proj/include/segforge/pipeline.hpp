#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "segforge/csv.hpp"
#include "segforge/date.hpp"
#include "segforge/elbow.hpp"
#include "segforge/errors.hpp"
#include "segforge/features.hpp"
#include "segforge/golden.hpp"
#include "segforge/insights.hpp"
#include "segforge/model.hpp"
#include "segforge/pms.hpp"
#include "segforge/synth.hpp"
#include "segforge/timeline.hpp"
#include "segforge/toml.hpp"

namespace segforge {

inline constexpr const char* kVersion = "0.1.0";

// Everything a full run needs. Loaded from one TOML file; individual CLI
// flags override single values afterwards.
struct PipelineConfig {
    std::filesystem::path profiles_csv = "profiles.csv";
    std::filesystem::path reservations_csv = "reservations.csv";
    std::filesystem::path folios_csv = "folios.csv";
    std::filesystem::path out_dir = "out";

    ChannelMap channel_map;
    TxnMap txn_map;

    std::vector<Date> timestamps;  // strictly increasing; last one trains the model
    int trials = 15;
    std::size_t sample_size = 10000;
    int k_max = 20;
    std::uint64_t seed = 1;
    int threads = static_cast<int>(std::thread::hardware_concurrency());

    double flow_threshold = 0.001;
    double highlight_ratio = 1.5;
    double highlight_gap_pp = 20.0;
    int outflow_after_years = 0;  // 0 = disabled

    std::map<int, std::string> segment_names;
    std::set<int> target_segments;  // empty = all

    Date final_timestamp() const {
        if (timestamps.empty()) throw config_error("InvalidConfig", "no timestamps configured");
        return timestamps.back();
    }

    OutflowRule outflow_rule() const { return {outflow_after_years > 0, outflow_after_years}; }
};

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    toml::Document doc = toml::read_file(path);
    PipelineConfig config;

    config.profiles_csv = doc.get_string("inputs", "profiles", config.profiles_csv.string());
    config.reservations_csv = doc.get_string("inputs", "reservations", config.reservations_csv.string());
    config.folios_csv = doc.get_string("inputs", "folios", config.folios_csv.string());
    config.out_dir = doc.get_string("pipeline", "out_dir", config.out_dir.string());

    auto read_string_map = [&](const char* section) {
        std::map<std::string, std::string> out;
        if (const toml::Section* s = doc.find(section))
            for (const auto& [key, value] : *s) {
                if (!value.is_string())
                    throw config_error("MalformedConfig", std::string(section) + "." + key + " must be a string");
                out[key] = value.as_string();
            }
        return out;
    };
    config.channel_map = channel_map_from_config(read_string_map("channel_map"));
    config.txn_map = txn_map_from_config(read_string_map("txn_map"));

    if (const toml::Value* v = doc.find("pipeline", "timestamps")) {
        if (!v->is_array()) throw config_error("MalformedConfig", "pipeline.timestamps must be an array");
        for (const auto& item : v->as_array())
            config.timestamps.push_back(Date::parse_or_throw(item.as_string(), "pipeline.timestamps"));
    }
    for (std::size_t i = 1; i < config.timestamps.size(); ++i)
        if (!(config.timestamps[i - 1] < config.timestamps[i]))
            throw config_error("InvalidConfig", "timestamps must be strictly increasing");

    config.trials = static_cast<int>(doc.get_int("pipeline", "trials", config.trials));
    config.sample_size = static_cast<std::size_t>(doc.get_int("pipeline", "sample", static_cast<std::int64_t>(config.sample_size)));
    config.k_max = static_cast<int>(doc.get_int("pipeline", "kmax", config.k_max));
    config.seed = static_cast<std::uint64_t>(doc.get_int("pipeline", "seed", static_cast<std::int64_t>(config.seed)));
    config.threads = static_cast<int>(doc.get_int("pipeline", "threads", config.threads));
    config.flow_threshold = doc.get_float("thresholds", "flow", config.flow_threshold);
    config.highlight_ratio = doc.get_float("thresholds", "highlight_ratio", config.highlight_ratio);
    config.highlight_gap_pp = doc.get_float("thresholds", "highlight_gap_pp", config.highlight_gap_pp);
    config.outflow_after_years = static_cast<int>(doc.get_int("pipeline", "outflow_after_years", 0));

    if (const toml::Section* names = doc.find("segment_names"))
        for (const auto& [key, value] : *names) config.segment_names[std::stoi(key)] = value.as_string();
    if (const toml::Value* v = doc.find("pipeline", "target_segments")) {
        for (const auto& item : v->as_array()) config.target_segments.insert(static_cast<int>(item.as_int()));
    }

    if (config.trials < 1 || config.k_max < 3 || config.sample_size < 1)
        throw config_error("InvalidConfig", "trials, kmax and sample must be positive (kmax >= 3)");
    if (config.threads < 1) config.threads = 1;
    return config;
}

namespace detail {

// Artifacts are written to "<name>.partial" and renamed into place, so a
// failed stage leaves its unfinished output clearly marked.
class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    template <typename Fn>
    std::filesystem::path write(const std::string& name, Fn&& fn) {
        std::filesystem::path partial = dir_ / (name + ".partial");
        std::filesystem::path final_path = dir_ / name;
        fn(partial);
        std::filesystem::rename(partial, final_path);
        names_.push_back(name);
        return final_path;
    }

    const std::filesystem::path& dir() const { return dir_; }
    const std::vector<std::string>& names() const { return names_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> names_;
};

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("WriteFailed", "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("MissingFile", "cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    return j;
}

inline std::string trial_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "elbow_trial%02d.csv", index + 1);
    return buf;
}

}  // namespace detail

// --- standalone steps --------------------------------------------------------
// Each step reads its inputs from files and writes its outputs to files,
// so the full run and a manual step-by-step run produce identical bytes.

inline Dataset step_ingest(const PipelineConfig& config) {
    return ingest(config.profiles_csv, config.reservations_csv, config.folios_csv, config.channel_map,
                  config.txn_map);
}

inline void step_merge_profiles(const Dataset& ds, detail::ArtifactWriter& out) {
    auto goldens = match_merge(ds.profiles, default_merge_rules());
    GoldenMap map = golden_map_of(goldens);
    out.write("golden_map.csv", [&](const std::filesystem::path& p) { write_golden_map(p, map); });
}

inline void step_features(const Dataset& ds, const GoldenMap& golden_map,
                          Date as_of, detail::ArtifactWriter& out) {
    auto vectors = build_features(ds, golden_map, as_of);
    ReductionCaps caps = reduce_dimensionality(vectors);
    out.write("features.csv", [&](const std::filesystem::path& p) { write_features_csv(p, vectors); });
    nlohmann::json meta;
    meta["as_of"] = as_of.to_string();
    meta["population"] = vectors.size();
    meta["percentage_grid_step"] = 0.2;
    meta["count_quantile"] = 0.95;
    meta["revenue_quantile"] = 0.99;
    nlohmann::json caps_json = nlohmann::json::object();
    for (std::size_t f = 0; f < kFeatureCount; ++f)
        if (!std::isnan(caps.cap[f])) caps_json[kFeatureSchema[f].name] = caps.cap[f];
    meta["caps"] = caps_json;
    out.write("features_meta.json", [&](const std::filesystem::path& p) { detail::write_json_file(p, meta); });
}

inline ReductionCaps caps_from_meta(const nlohmann::json& meta) {
    ReductionCaps caps;
    for (const auto& [name, value] : meta.at("caps").items())
        for (std::size_t f = 0; f < kFeatureCount; ++f)
            if (name == kFeatureSchema[f].name) caps.cap[f] = value.get<double>();
    return caps;
}

struct SelectKResult {
    SegmentModel model;
    StabilityVerdict verdict;
    std::vector<double> trial_elapsed_ms;
};

inline SelectKResult step_select_k(const PipelineConfig& config, detail::ArtifactWriter& out) {
    auto vectors = read_features_csv(out.dir() / "features.csv");
    std::sort(vectors.begin(), vectors.end(),
              [](const FeatureVector& a, const FeatureVector& b) { return a.golden_id < b.golden_id; });
    nlohmann::json meta = detail::read_json_file(out.dir() / "features_meta.json");
    ReductionCaps caps = caps_from_meta(meta);
    Date as_of = Date::parse_or_throw(meta.at("as_of").get<std::string>(), "features_meta.json");

    TrialParams params;
    params.trial_count = config.trials;
    params.sample_size = config.sample_size;
    params.k_max = config.k_max;
    params.seed = config.seed;
    params.threads = config.threads;
    TrialsResult trials = run_trials(vectors, params);

    for (const auto& trial : trials.trials) {
        if (trial.table.rows.empty()) continue;
        out.write(detail::trial_file_name(trial.index),
                  [&](const std::filesystem::path& p) { write_elbow_csv(p, trial.table); });
    }

    SelectKResult result;
    result.model = build_model(trials, vectors, caps, as_of, config.seed, config.segment_names);
    result.verdict = trials.verdict;
    for (const auto& trial : trials.trials) result.trial_elapsed_ms.push_back(trial.elapsed_ms);

    for (const auto& trial : trials.trials)
        if (trial.table.monotone_warning)
            std::fprintf(stderr, "segforge: trial %d criterion is not monotone, elbow flags may be noisy\n",
                         trial.index + 1);

    // canonical elbow.csv and merges.csv come from the exemplar trial
    const TrialOutcome& chosen = trials.trials[static_cast<std::size_t>(result.model.trial_index)];
    out.write("elbow.csv", [&](const std::filesystem::path& p) { write_elbow_csv(p, chosen.table); });
    out.write("merges.csv", [&](const std::filesystem::path& p) { write_merges_csv(p, chosen.dendrogram); });
    out.write("model.json", [&](const std::filesystem::path& p) { write_model_json(p, result.model); });
    return result;
}

inline void step_classify(const PipelineConfig& config, detail::ArtifactWriter& out,
                          const std::filesystem::path& model_path) {
    SegmentModel model = read_model_json(model_path);
    auto vectors = read_features_csv(out.dir() / "features.csv");
    std::sort(vectors.begin(), vectors.end(),
              [](const FeatureVector& a, const FeatureVector& b) { return a.golden_id < b.golden_id; });
    std::vector<int> labels = propagate_1nn(model, vectors, config.threads);
    out.write("segments.csv", [&](const std::filesystem::path& p) { write_segments_csv(p, vectors, labels); });
}

inline void step_timeline(const PipelineConfig& config, const Dataset& ds, const GoldenMap& golden_map,
                          const SegmentModel& model, detail::ArtifactWriter& out) {
    if (config.timestamps.size() < 2)
        throw config_error("InvalidConfig", "timeline needs at least two timestamps");
    OutflowRule outflow = config.outflow_rule();

    std::vector<SnapshotAssignment> snapshots(config.timestamps.size());
    // Snapshots are independent; compute them in parallel when allowed.
    if (config.threads > 1 && config.timestamps.size() > 1) {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mu;
        auto worker = [&] {
            for (;;) {
                std::size_t i;
                {
                    std::lock_guard<std::mutex> lock(mu);
                    if (next >= snapshots.size()) return;
                    i = next++;
                }
                snapshots[i] = snapshot(ds, golden_map, model, config.timestamps[i], 1, outflow);
            }
        };
        int workers = std::min<int>(config.threads, static_cast<int>(snapshots.size()));
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    } else {
        for (std::size_t i = 0; i < snapshots.size(); ++i)
            snapshots[i] = snapshot(ds, golden_map, model, config.timestamps[i], 1, outflow);
    }

    std::vector<TransitionTable> tables;
    for (std::size_t i = 0; i + 1 < snapshots.size(); ++i)
        tables.push_back(transitions(snapshots[i], snapshots[i + 1]));

    nlohmann::json flows = flow_export(snapshots, tables, model, config.flow_threshold, outflow);
    out.write("flows.json", [&](const std::filesystem::path& p) { write_flows_json(p, flows); });
    out.write("transitions.csv",
              [&](const std::filesystem::path& p) { write_transitions_csv(p, tables, model, outflow); });

    nlohmann::json explains = nlohmann::json::array();
    for (std::size_t i = 0; i + 1 < snapshots.size(); ++i) {
        const TransitionTable& table = tables[i];
        for (int from = 1; from <= table.k; ++from) {
            for (int to = 1; to <= table.k; ++to) {
                if (from == to) continue;
                if (table.counts[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] == 0) continue;
                TransitionExplanation e = explain(from, to, snapshots[i], snapshots[i + 1]);
                nlohmann::json j = explanation_to_json(e, model, outflow);
                j["from_timestamp"] = table.from_timestamp.to_string();
                j["to_timestamp"] = table.to_timestamp.to_string();
                explains.push_back(std::move(j));
            }
        }
    }
    out.write("explain.json", [&](const std::filesystem::path& p) { detail::write_json_file(p, explains); });
}

inline void step_report(const PipelineConfig& config, const Dataset& ds, detail::ArtifactWriter& out,
                        const SegmentModel& model) {
    auto vectors = read_features_csv(out.dir() / "features.csv");
    std::sort(vectors.begin(), vectors.end(),
              [](const FeatureVector& a, const FeatureVector& b) { return a.golden_id < b.golden_id; });
    csv::Table seg_table = csv::read_file(out.dir() / "segments.csv");
    std::unordered_map<std::string, int> label_of;
    for (const auto& row : seg_table.rows)
        label_of[row[0]] = static_cast<int>(csv::parse_int(row[1], "segments.csv"));
    std::vector<int> labels;
    labels.reserve(vectors.size());
    for (const auto& v : vectors) {
        auto it = label_of.find(v.golden_id);
        if (it == label_of.end())
            throw data_error("DanglingForeignKey", "segments.csv lacks a label for " + v.golden_id);
        labels.push_back(it->second);
    }

    EdaReport eda = eda_report(ds);
    out.write("eda.json", [&](const std::filesystem::path& p) { detail::write_json_file(p, eda_to_json(eda)); });

    auto profiles = segment_profile(vectors, labels, model);
    auto highlights = characteristic_highlight(profiles, {config.highlight_ratio, config.highlight_gap_pp});
    out.write("segment_profile.csv",
              [&](const std::filesystem::path& p) { write_segment_profile_csv(p, profiles, highlights); });

    auto goldens = match_merge(ds.profiles, default_merge_rules());
    std::set<int> segments = config.target_segments;
    if (segments.empty())
        for (int s = 1; s <= model.k; ++s) segments.insert(s);
    TargetList targets = target_list(vectors, labels, goldens, segments);
    out.write("targets.csv", [&](const std::filesystem::path& p) { write_targets_csv(p, targets, model); });
}

// Full pipeline: ingest, deduplicate, build features, select k, classify,
// replay over time, report. Returns the artifact directory.
inline std::filesystem::path run_pipeline(const PipelineConfig& config) {
    using Clock = std::chrono::steady_clock;
    detail::ArtifactWriter out(config.out_dir);
    std::map<std::string, double> timings;
    auto timed = [&](const char* stage, auto&& fn) {
        auto t0 = Clock::now();
        fn();
        timings[stage] = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    };

    Dataset ds;
    timed("ingest", [&] { ds = step_ingest(config); });
    timed("merge_profiles", [&] { step_merge_profiles(ds, out); });
    GoldenMap golden_map = read_golden_map(config.out_dir / "golden_map.csv");
    timed("features", [&] { step_features(ds, golden_map, config.final_timestamp(), out); });
    SelectKResult selected;
    timed("select_k", [&] { selected = step_select_k(config, out); });
    timed("classify", [&] { step_classify(config, out, config.out_dir / "model.json"); });
    timed("timeline", [&] { step_timeline(config, ds, golden_map, selected.model, out); });
    timed("report", [&] { step_report(config, ds, out, selected.model); });

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["seed"] = config.seed;
    manifest["threads"] = config.threads;
    manifest["trials"] = config.trials;
    manifest["sample"] = config.sample_size;
    manifest["kmax"] = config.k_max;
    manifest["timestamps"] = nlohmann::json::array();
    for (Date t : config.timestamps) manifest["timestamps"].push_back(t.to_string());
    manifest["stability"] = {{"verdict", to_string(selected.verdict.stability)},
                             {"mode_k", selected.verdict.mode_k}};
    nlohmann::json votes = nlohmann::json::object();
    for (const auto& [k, count] : selected.verdict.votes) votes[std::to_string(k)] = count;
    manifest["stability"]["votes"] = votes;
    manifest["timings_ms"] = timings;  // wall-clock, excluded from determinism guarantees
    manifest["trial_timings_ms"] = selected.trial_elapsed_ms;
    manifest["artifacts"] = out.names();
    detail::write_json_file(config.out_dir / "run_manifest.json", manifest);
    return config.out_dir;
}

}  // namespace segforge
