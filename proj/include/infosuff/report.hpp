#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "infosuff/record_store.hpp"

namespace infosuff {

struct ReportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ReportOptions {
    std::string out_dir;
    std::uint64_t seed = 42;       // for the Pareto bootstrap CIs
    int bootstrap_resamples = 10000;
    double ci_level = 0.95;
    int low_sample_threshold = 50;  // context cells below this get flagged
    // Grouping for the main/full/vuln tables (kGroupBy* flags); the
    // context grid always groups by cell x strategy.
    unsigned main_grouping = 0;  // 0 = model x strategy
};

// Emits main_results.csv, full_results.csv, vuln_gap.csv, context_grid.csv,
// sensitivity.csv, pareto.json, main_results.md, context_grid.md, and
// report_meta.json under out_dir. Pure function of the store contents.
void write_reports(const RecordStore& store, const ReportOptions& options);

struct StatsOptions {
    std::string out_path;  // stats.json
    // Stores produced by re-judging the same trials with other judge
    // models; enables the cross-judge Krippendorff's alpha section.
    std::vector<std::string> judge_store_dirs;
};

// Pairwise Wilcoxon (scenario-paired, Bonferroni over the strategy pairs,
// rank-biserial), Kruskal-Wallis over strategies, variance decomposition,
// the reply-length/covertness comparison, and optionally Krippendorff's
// alpha across judge models.
void write_stats(const RecordStore& store, const StatsOptions& options);

}  // namespace infosuff
