#include <cstdio>
#include <fstream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "infosuff/config.hpp"
#include "infosuff/corpus_filter.hpp"
#include "infosuff/metrics.hpp"
#include "infosuff/record_store.hpp"
#include "infosuff/report.hpp"
#include "infosuff/runner.hpp"
#include "infosuff/scenario.hpp"
#include "infosuff/util.hpp"

namespace {

using namespace infosuff;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitStoreCorruption = 2;

int cmd_validate(const std::string& corpus_path, bool do_dedup, double dedup_threshold,
                 const std::string& naturalness_path, int naturalness_threshold,
                 int cap_per_cell, std::uint64_t seed, const std::string& out_path) {
    ScenarioSet set = load_corpus_file(corpus_path);
    std::printf("loaded %zu scenarios (digest %s)\n", set.scenarios.size(),
                set.provenance.substr(0, 12).c_str());

    if (!naturalness_path.empty()) {
        std::ifstream f(naturalness_path);
        if (!f) throw CorpusError("cannot open naturalness scores: " + naturalness_path);
        nlohmann::json j;
        f >> j;
        std::map<std::string, int> scores;
        for (auto it = j.begin(); it != j.end(); ++it) scores[it.key()] = it.value().get<int>();
        set = filter_naturalness(set, scores, naturalness_threshold);
        std::printf("naturalness >= %d keeps %zu scenarios\n", naturalness_threshold,
                    set.scenarios.size());
    }
    if (do_dedup) {
        set = dedup(set, dedup_threshold);
        std::printf("dedup at %.2f keeps %zu scenarios\n", dedup_threshold,
                    set.scenarios.size());
    }
    if (cap_per_cell > 0) {
        set = balance_cells(set, cap_per_cell, seed);
        std::printf("cell cap %d keeps %zu scenarios\n", cap_per_cell, set.scenarios.size());
    }
    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
        f << serialize_corpus(set);
        std::printf("wrote %s\n", out_path.c_str());
    }
    return kExitOk;
}

int cmd_run(const std::string& config_path, bool resume, int max_trials) {
    RunConfig config = load_run_config(config_path);
    ScenarioSet corpus = load_corpus_file(config.corpus_path);
    RecordStore store(config.store_path);
    if (store.size() > 0 && !resume)
        throw ConfigError("store " + config.store_path +
                          " already has records; pass --resume to continue");

    ProviderSet providers = build_providers(config);
    RunOptions options;
    if (max_trials > 0) options.max_trials = std::size_t(max_trials);
    RunSummary summary = run_trials(config, corpus, store, providers, options);
    std::printf("pending %zu, completed %zu, failed %zu\n", summary.pending_before,
                summary.completed, summary.failed);
    if (summary.failed > 0)
        std::printf("warning: %zu trial(s) failed; rerun with --resume to retry\n",
                    summary.failed);
    return kExitOk;
}

unsigned parse_grouping(const std::string& spec) {
    unsigned grouping = 0;
    for (const auto& part : split(spec, ',')) {
        std::string t = trim(part);
        if (t == "model") grouping |= kGroupByModel;
        else if (t == "strategy") grouping |= kGroupByStrategy;
        else if (t == "cell") grouping |= kGroupByCell;
        else if (!t.empty()) throw ConfigError("unknown group key: " + t);
    }
    return grouping;
}

int cmd_report(const std::string& store_path, const std::string& out_dir,
               const std::string& group_spec, std::uint64_t seed, int resamples) {
    RecordStore store(store_path);
    ReportOptions options;
    options.out_dir = out_dir;
    options.seed = seed;
    options.bootstrap_resamples = resamples;
    options.main_grouping = parse_grouping(group_spec);
    write_reports(store, options);
    std::printf("reports written to %s\n", out_dir.c_str());
    return kExitOk;
}

int cmd_stats(const std::string& store_path, const std::string& out_path,
              const std::vector<std::string>& judge_stores) {
    RecordStore store(store_path);
    StatsOptions options;
    options.out_path = out_path;
    options.judge_store_dirs = judge_stores;
    write_stats(store, options);
    std::printf("stats written to %s\n", out_path.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conversational privacy evaluation harness"};
    app.require_subcommand(1);

    // validate
    std::string corpus_path, naturalness_path, out_path;
    bool do_dedup = false;
    double dedup_threshold = 0.85;
    int naturalness_threshold = 3, cap_per_cell = 0;
    std::uint64_t seed = 0;
    auto* validate = app.add_subcommand("validate", "Validate and filter a scenario corpus");
    validate->add_option("--corpus", corpus_path, "JSONL corpus file")->required();
    validate->add_flag("--dedup", do_dedup, "Drop near-duplicate scenarios (dry run unless --out)");
    validate->add_option("--dedup-threshold", dedup_threshold, "TF-IDF cosine threshold");
    validate->add_option("--naturalness", naturalness_path,
                         "JSON map of scenario id to naturalness score 1..5");
    validate->add_option("--naturalness-threshold", naturalness_threshold,
                         "Keep scenarios scoring at least this");
    validate->add_option("--cap", cap_per_cell, "Cap per relation x sensitivity cell");
    validate->add_option("--seed", seed, "Seed for balancing");
    validate->add_option("--out", out_path, "Write the filtered corpus here");

    // run
    std::string config_path;
    bool resume = false;
    int max_trials = 0;
    auto* run = app.add_subcommand("run", "Execute pending trials");
    run->add_option("--config", config_path, "Run config file")->required();
    run->add_flag("--resume", resume, "Continue an existing store");
    run->add_option("--max-trials", max_trials, "Stop after this many trials");

    // report
    std::string store_path, report_out, group_spec = "model,strategy";
    std::uint64_t report_seed = 42;
    int resamples = 10000;
    auto* report = app.add_subcommand("report", "Write aggregate tables from a store");
    report->add_option("--store", store_path, "Record store directory")->required();
    report->add_option("--out", report_out, "Output directory")->required();
    report->add_option("--group", group_spec, "Grouping keys: model,strategy,cell");
    report->add_option("--seed", report_seed, "Bootstrap seed");
    report->add_option("--resamples", resamples, "Bootstrap resamples");

    // stats
    std::string stats_store, stats_out = "stats.json";
    std::vector<std::string> judge_stores;
    auto* stats = app.add_subcommand("stats", "Write statistical tests from a store");
    stats->add_option("--store", stats_store, "Record store directory")->required();
    stats->add_option("--out", stats_out, "Output stats.json path");
    stats->add_option("--judges", judge_stores,
                      "Additional stores re-judged with other judge models")
        ->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed())
            return cmd_validate(corpus_path, do_dedup, dedup_threshold, naturalness_path,
                                naturalness_threshold, cap_per_cell, seed, out_path);
        if (run->parsed()) return cmd_run(config_path, resume, max_trials);
        if (report->parsed())
            return cmd_report(store_path, report_out, group_spec, report_seed, resamples);
        if (stats->parsed()) return cmd_stats(stats_store, stats_out, judge_stores);
    } catch (const StoreError& e) {
        std::fprintf(stderr, "store error: %s\n", e.what());
        return kExitStoreCorruption;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
    return kExitOk;
}
