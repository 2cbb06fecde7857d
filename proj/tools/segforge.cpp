// segforge: guest segmentation pipeline over PMS-style hotel data.
// Subcommands cover the whole flow (synth, ingest, merge-profiles,
// features, select-k, classify, timeline, report, run); every value in
// the TOML config can be overridden by a flag, flags win.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "segforge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace segforge;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string out_dir;
    int threads = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

PipelineConfig load_config(const GlobalOptions& global) {
    if (global.config_path.empty())
        throw config_error("InvalidConfig", "no config file: pass --config or set SEGFORGE_CONFIG");
    PipelineConfig config = load_pipeline_config(global.config_path);
    if (!global.out_dir.empty()) config.out_dir = global.out_dir;
    if (global.threads > 0) config.threads = global.threads;
    if (global.seed_set) config.seed = global.seed;
    return config;
}

int report_error(const Error& e) {
    std::fprintf(stderr, "segforge: %s\n", e.what());
    return e.exit_code();
}

synth::GeneratorConfig load_generator_config(const std::string& path) {
    synth::GeneratorConfig config;
    if (path.empty()) {
        config.archetype_weights = {0.25, 0.25, 0.25, 0.25};
        return config;
    }
    toml::Document doc = toml::read_file(path);
    config.seed = static_cast<std::uint64_t>(doc.get_int("generator", "seed", 1));
    config.guest_count = static_cast<std::size_t>(doc.get_int("generator", "profiles", 1000));
    config.duplicate_rate = doc.get_float("generator", "duplicate_rate", 0.0);
    config.range_start = Date::parse_or_throw(doc.get_string("generator", "range_start", "2015-01-01"),
                                              "generator.range_start");
    config.range_end =
        Date::parse_or_throw(doc.get_string("generator", "range_end", "2020-01-01"), "generator.range_end");
    if (const toml::Value* v = doc.find("generator", "weights")) {
        for (const auto& item : v->as_array()) config.archetype_weights.push_back(item.as_float());
    } else {
        config.archetype_weights = {0.25, 0.25, 0.25, 0.25};
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"guest segmentation pipeline"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "pipeline config file (TOML)")
        ->envname("SEGFORGE_CONFIG");
    app.add_option("--out", global.out_dir, "artifact directory (overrides config)");
    app.add_option("--threads", global.threads, "worker thread cap");
    auto* seed_opt = app.add_option("--seed", global.seed, "random seed (overrides config)");

    auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic PMS dataset");
    std::string synth_config_path, synth_out = "data";
    std::uint64_t synth_seed = 1;
    std::size_t synth_profiles = 1000;
    double synth_dup_rate = -1.0;
    cmd_synth->add_option("--config", synth_config_path, "generator config (TOML)");
    cmd_synth->add_option("--seed", synth_seed, "generator seed");
    cmd_synth->add_option("--profiles", synth_profiles, "number of distinct guests");
    cmd_synth->add_option("--dup-rate", synth_dup_rate, "duplicate profile injection rate [0, 0.2]");
    cmd_synth->add_option("--out", synth_out, "output directory");

    auto* cmd_ingest = app.add_subcommand("ingest", "validate inputs and re-export canonical CSVs");
    auto* cmd_merge = app.add_subcommand("merge-profiles", "deduplicate profiles into golden profiles");

    auto* cmd_features = app.add_subcommand("features", "build the per-profile feature table");
    std::string as_of_str;
    cmd_features->add_option("--as-of", as_of_str, "evaluation date (default: last timestamp)");

    auto* cmd_select = app.add_subcommand("select-k", "run sampling trials and pick the cluster count");
    int opt_trials = 0, opt_kmax = 0;
    std::size_t opt_sample = 0;
    cmd_select->add_option("--trials", opt_trials, "number of trials");
    cmd_select->add_option("--sample", opt_sample, "profiles per trial sample");
    cmd_select->add_option("--kmax", opt_kmax, "largest cluster count to evaluate");

    auto* cmd_classify = app.add_subcommand("classify", "label every profile with the trained model");
    std::string model_path;
    cmd_classify->add_option("--model", model_path, "model file (default: <out>/model.json)");

    auto* cmd_timeline = app.add_subcommand("timeline", "evaluate snapshots over time and export flows");
    std::string timestamps_csv;
    double flow_threshold = -1.0;
    int outflow_years = -1;
    cmd_timeline->add_option("--timestamps", timestamps_csv, "comma-separated evaluation dates");
    cmd_timeline->add_option("--threshold", flow_threshold, "display share threshold (default 0.001)");
    cmd_timeline->add_option("--outflow-after", outflow_years,
                             "move profiles inactive this many years to Outflow");

    auto* cmd_report = app.add_subcommand("report", "descriptive statistics and per-segment overview");
    auto* cmd_run = app.add_subcommand("run", "execute the whole pipeline");

    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);
    global.seed_set = seed_opt->count() > 0;

    try {
        if (cmd_synth->parsed()) {
            synth::GeneratorConfig config = load_generator_config(synth_config_path);
            if (cmd_synth->count("--seed")) config.seed = synth_seed;
            if (cmd_synth->count("--profiles")) config.guest_count = synth_profiles;
            if (synth_dup_rate >= 0.0) config.duplicate_rate = synth_dup_rate;
            fs::create_directories(synth_out);
            auto data = synth::generate_files(config, synth_out);
            std::printf("wrote %zu profiles, %zu reservations, %zu folios to %s\n", data.profiles.size(),
                        data.reservations.size(), data.folios.size(), synth_out.c_str());
            return 0;
        }

        PipelineConfig config = load_config(global);

        if (cmd_ingest->parsed()) {
            Dataset ds = step_ingest(config);
            ValidationReport report = validate(ds);
            fs::create_directories(config.out_dir);
            export_csv(ds, config.out_dir);
            std::printf("ingested %zu profiles, %zu reservations, %zu folios; %zu violation(s)\n",
                        ds.profiles.size(), ds.reservations.size(), ds.folios.size(), report.entries.size());
            for (const auto& v : report.entries)
                std::printf("  %s %s %s: %s\n", v.kind.c_str(), v.table.c_str(), v.row_id.c_str(),
                            v.message.c_str());
            return report.ok() ? 0 : 3;
        }
        if (cmd_merge->parsed()) {
            Dataset ds = step_ingest(config);
            detail::ArtifactWriter out(config.out_dir);
            step_merge_profiles(ds, out);
            std::printf("wrote %s\n", (config.out_dir / "golden_map.csv").string().c_str());
            return 0;
        }
        if (cmd_features->parsed()) {
            Dataset ds = step_ingest(config);
            GoldenMap golden_map = read_golden_map(config.out_dir / "golden_map.csv");
            Date as_of =
                as_of_str.empty() ? config.final_timestamp() : Date::parse_or_throw(as_of_str, "--as-of");
            detail::ArtifactWriter out(config.out_dir);
            step_features(ds, golden_map, as_of, out);
            std::printf("wrote %s\n", (config.out_dir / "features.csv").string().c_str());
            return 0;
        }
        if (cmd_select->parsed()) {
            if (opt_trials > 0) config.trials = opt_trials;
            if (opt_sample > 0) config.sample_size = opt_sample;
            if (opt_kmax > 0) config.k_max = opt_kmax;
            detail::ArtifactWriter out(config.out_dir);
            SelectKResult result = step_select_k(config, out);
            std::printf("optimal k = %d (%s); votes:", result.model.k, to_string(result.verdict.stability));
            for (const auto& [k, count] : result.verdict.votes) std::printf(" %d:%d", k, count);
            std::printf("\n");
            return 0;
        }
        if (cmd_classify->parsed()) {
            detail::ArtifactWriter out(config.out_dir);
            fs::path model_file = model_path.empty() ? config.out_dir / "model.json" : fs::path(model_path);
            step_classify(config, out, model_file);
            std::printf("wrote %s\n", (config.out_dir / "segments.csv").string().c_str());
            return 0;
        }
        if (cmd_timeline->parsed()) {
            if (!timestamps_csv.empty()) {
                config.timestamps.clear();
                std::size_t start = 0;
                while (start <= timestamps_csv.size()) {
                    std::size_t comma = timestamps_csv.find(',', start);
                    std::string tok = timestamps_csv.substr(
                        start, comma == std::string::npos ? std::string::npos : comma - start);
                    if (!tok.empty()) config.timestamps.push_back(Date::parse_or_throw(tok, "--timestamps"));
                    if (comma == std::string::npos) break;
                    start = comma + 1;
                }
            }
            if (flow_threshold >= 0.0) config.flow_threshold = flow_threshold;
            if (outflow_years >= 0) config.outflow_after_years = outflow_years;
            Dataset ds = step_ingest(config);
            GoldenMap golden_map = read_golden_map(config.out_dir / "golden_map.csv");
            SegmentModel model = read_model_json(config.out_dir / "model.json");
            detail::ArtifactWriter out(config.out_dir);
            step_timeline(config, ds, golden_map, model, out);
            std::printf("wrote %s\n", (config.out_dir / "flows.json").string().c_str());
            return 0;
        }
        if (cmd_report->parsed()) {
            Dataset ds = step_ingest(config);
            SegmentModel model = read_model_json(config.out_dir / "model.json");
            detail::ArtifactWriter out(config.out_dir);
            step_report(config, ds, out, model);
            std::printf("wrote eda.json, segment_profile.csv, targets.csv to %s\n",
                        config.out_dir.string().c_str());
            return 0;
        }
        if (cmd_run->parsed()) {
            fs::path dir = run_pipeline(config);
            std::printf("pipeline complete; artifacts in %s\n", dir.string().c_str());
            return 0;
        }
    } catch (const Error& e) {
        return report_error(e);
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "segforge: malformed JSON input: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "segforge: %s\n", e.what());
        return 1;
    }
    return 0;
}
