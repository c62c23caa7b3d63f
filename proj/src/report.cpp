#include "infosuff/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "infosuff/metrics.hpp"
#include "infosuff/stats.hpp"
#include "infosuff/util.hpp"

namespace infosuff {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int strategy_rank(const std::string& s) {
    if (s == "no_protection") return 0;
    if (s == "suppress") return 1;
    if (s == "generalize") return 2;
    if (s == "pseudonymize") return 3;
    return 4;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ReportError("cannot write " + path.string());
    f << content;
    if (!f.good()) throw ReportError("write failed on " + path.string());
}

std::vector<MetricsRecord> complete_metrics(const RecordStore& store) {
    ScanFilter filter;
    filter.status = TrialStatus::complete;
    std::vector<MetricsRecord> out;
    for (const auto& r : store.scan(filter)) out.push_back(metrics_record(r));
    if (out.empty()) throw ReportError("no complete trials");
    return out;
}

std::vector<AggregateRow> sorted_rows(std::vector<AggregateRow> rows) {
    std::sort(rows.begin(), rows.end(), [](const AggregateRow& a, const AggregateRow& b) {
        auto ka = std::make_tuple(a.key.model, a.key.relation, a.key.sensitivity,
                                  strategy_rank(a.key.strategy));
        auto kb = std::make_tuple(b.key.model, b.key.relation, b.key.sensitivity,
                                  strategy_rank(b.key.strategy));
        return ka < kb;
    });
    return rows;
}

std::vector<std::string> strategies_present(const std::vector<MetricsRecord>& records) {
    std::set<std::string> seen;
    for (const auto& r : records) seen.insert(r.strategy);
    std::vector<std::string> out(seen.begin(), seen.end());
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
        return strategy_rank(a) < strategy_rank(b);
    });
    return out;
}

// ---------------------------------------------------------------------------
// CSV tables

std::string main_results_csv(const std::vector<AggregateRow>& rows) {
    std::string out = "model,strategy,n,hls_p,utility,isad_p\n";
    for (const auto& r : rows) {
        out += csv_escape(r.key.model) + "," + r.key.strategy + "," + std::to_string(r.n) +
               "," + fmt_double(r.hls_p) + "," + fmt_double(r.util) + "," +
               fmt_double(r.isad_p) + "\n";
    }
    return out;
}

std::string full_results_csv(const std::vector<AggregateRow>& rows) {
    std::string out =
        "model,strategy,n,em_s,em_p,cm_s,cm_p,hls_s,hls_p,utility,covertness,"
        "naturalness_flow,naturalness_plausibility,isad_s,isad_p\n";
    for (const auto& r : rows) {
        out += csv_escape(r.key.model) + "," + r.key.strategy + "," + std::to_string(r.n);
        for (double v : {r.em_s, r.em_p, r.cm_s, r.cm_p, r.hls_s, r.hls_p, r.util, r.covert,
                         r.natural_flow, r.natural_plaus, r.isad_s, r.isad_p})
            out += "," + fmt_double(v);
        out += "\n";
    }
    return out;
}

std::string vuln_gap_csv(const std::vector<AggregateRow>& rows) {
    std::string out = "model,strategy,n,em_p,em_s,delta_vuln\n";
    for (const auto& r : rows) {
        out += csv_escape(r.key.model) + "," + r.key.strategy + "," + std::to_string(r.n) +
               "," + fmt_double(r.em_p) + "," + fmt_double(r.em_s) + "," +
               fmt_double(r.delta_vuln) + "\n";
    }
    return out;
}

std::string context_grid_csv(const std::vector<AggregateRow>& rows, int low_threshold) {
    // cell N = all conversations in the relation x sensitivity cell
    std::map<std::pair<std::string, std::string>, std::size_t> cell_n;
    for (const auto& r : rows) cell_n[{r.key.relation, r.key.sensitivity}] += r.n;

    std::string out = "relation,sensitivity,strategy,n,cell_n,isad_p,low_sample\n";
    for (const auto& r : rows) {
        std::size_t total = cell_n[{r.key.relation, r.key.sensitivity}];
        out += r.key.relation + "," + r.key.sensitivity + "," + r.key.strategy + "," +
               std::to_string(r.n) + "," + std::to_string(total) + "," +
               fmt_double(r.isad_p) + "," +
               (total < std::size_t(low_threshold) ? "true" : "false") + "\n";
    }
    return out;
}

std::string sensitivity_csv(const std::vector<MetricsRecord>& records,
                            const std::vector<std::string>& strategies) {
    struct RowSpec {
        std::string label;
        AggregationKind kind;
        double alpha;
        bool current;  // the composite in use, mean of per-trial isad_p
    };
    const std::vector<RowSpec> specs = {
        {"isad", AggregationKind::additive, 0.0, true},
        {"additive_0.3", AggregationKind::additive, 0.3, false},
        {"additive_0.5", AggregationKind::additive, 0.5, false},
        {"additive_0.7", AggregationKind::additive, 0.7, false},
        {"harmonic", AggregationKind::harmonic, 0.0, false},
        {"min", AggregationKind::min, 0.0, false},
        {"geometric", AggregationKind::geometric, 0.0, false},
    };

    std::string out = "aggregation";
    for (const auto& s : strategies) out += "," + s;
    out += "\n";
    for (const auto& spec : specs) {
        out += spec.label;
        for (const auto& strategy : strategies) {
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& r : records) {
                if (r.strategy != strategy) continue;
                double value = spec.current
                                   ? r.m.isad_p
                                   : alt_aggregate(1.0 - r.m.hls_p, r.m.util, spec.kind,
                                                   spec.alpha);
                sum += value;
                ++n;
            }
            out += "," + (n ? fmt_double(sum / double(n)) : std::string("nan"));
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pareto plot data

json pareto_json(const RecordStore& store, const std::vector<MetricsRecord>& records,
                 const ReportOptions& options) {
    std::map<std::pair<std::string, std::string>, std::vector<const MetricsRecord*>> groups;
    for (const auto& r : records) groups[{r.model, r.strategy}].push_back(&r);

    json points = json::array();
    for (const auto& [key, members] : groups) {
        std::vector<double> privacy, util, isad_values;
        for (const auto* r : members) {
            privacy.push_back(1.0 - r->m.hls_p);
            util.push_back(r->m.util);
            isad_values.push_back(r->m.isad_p);
        }
        auto mean = [](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v) s += x;
            return s / double(v.size());
        };
        std::uint64_t seed =
            derive_seed(options.seed, "pareto/" + key.first + "/" + key.second);
        auto privacy_ci =
            bootstrap_ci(privacy, options.ci_level, options.bootstrap_resamples, seed);
        auto util_ci = bootstrap_ci(util, options.ci_level, options.bootstrap_resamples,
                                    derive_seed(seed, "utility"));
        json point;
        point["model"] = key.first;
        point["strategy"] = key.second;
        point["n"] = members.size();
        point["privacy"] = mean(privacy);
        point["privacy_ci"] = {privacy_ci.first, privacy_ci.second};
        point["utility"] = mean(util);
        point["utility_ci"] = {util_ci.first, util_ci.second};
        point["isad_p"] = mean(isad_values);
        points.push_back(point);
    }
    json out;
    out["points"] = points;
    out["ci_level"] = options.ci_level;
    out["resamples"] = options.bootstrap_resamples;
    out["seed"] = options.seed;
    out["config_digest"] = store.read_meta("config_digest").value_or("unknown");
    return out;
}

// ---------------------------------------------------------------------------
// Markdown tables (rounded for eyeballing)

std::string main_results_md(const std::vector<AggregateRow>& rows,
                            const std::vector<std::string>& strategies) {
    std::map<std::pair<std::string, std::string>, const AggregateRow*> lookup;
    std::set<std::string> model_set;
    for (const auto& r : rows) {
        lookup[{r.key.model, r.key.strategy}] = &r;
        model_set.insert(r.key.model);
    }

    auto cell = [&](const std::string& model, const std::string& strategy,
                    double AggregateRow::* field) -> std::string {
        auto it = lookup.find({model, strategy});
        if (it == lookup.end()) return "-";
        return fmt_fixed(it->second->*field, 2);
    };

    std::string out = "| Model |";
    for (const char* metric : {" HLS_p", " Utility", " IS-AD_p"})
        for (const auto& s : strategies) out += std::string(metric) + " (" + s + ") |";
    out += "\n|---|";
    for (std::size_t i = 0; i < strategies.size() * 3; ++i) out += "---|";
    out += "\n";
    for (const auto& model : model_set) {
        out += "| " + model + " |";
        for (const auto& s : strategies) out += " " + cell(model, s, &AggregateRow::hls_p) + " |";
        for (const auto& s : strategies) out += " " + cell(model, s, &AggregateRow::util) + " |";
        for (const auto& s : strategies)
            out += " " + cell(model, s, &AggregateRow::isad_p) + " |";
        out += "\n";
    }
    return out;
}

std::string context_grid_md(const std::vector<AggregateRow>& rows,
                            const std::vector<std::string>& strategies, int low_threshold) {
    const std::vector<std::string> relations = {"institutional", "peer", "intimate"};
    const std::vector<std::string> sensitivities = {"boundary", "discrimination_risk",
                                                    "social_cost"};
    std::map<std::tuple<std::string, std::string, std::string>, const AggregateRow*> lookup;
    std::map<std::pair<std::string, std::string>, std::size_t> cell_n;
    for (const auto& r : rows) {
        lookup[{r.key.relation, r.key.sensitivity, r.key.strategy}] = &r;
        cell_n[{r.key.relation, r.key.sensitivity}] += r.n;
    }

    std::string out = "| Relation | Strategy | Boundary | Discrim. | Social |\n";
    out += "|---|---|---|---|---|\n";
    for (const auto& relation : relations) {
        for (const auto& strategy : strategies) {
            out += "| " + relation + " | " + strategy + " |";
            for (const auto& sensitivity : sensitivities) {
                auto it = lookup.find({relation, sensitivity, strategy});
                if (it == lookup.end()) {
                    out += " - |";
                    continue;
                }
                std::string value = fmt_fixed(it->second->isad_p, 3);
                if (cell_n[{relation, sensitivity}] < std::size_t(low_threshold)) value += "*";
                out += " " + value + " |";
            }
            out += "\n";
        }
        out += "| " + relation + " | N |";
        for (const auto& sensitivity : sensitivities) {
            auto it = cell_n.find({relation, sensitivity});
            out += " " + (it == cell_n.end() ? std::string("0")
                                             : std::to_string(it->second)) + " |";
        }
        out += "\n";
    }
    out += "\n\\* cell N below " + std::to_string(low_threshold) + "\n";
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void write_reports(const RecordStore& store, const ReportOptions& options) {
    if (options.out_dir.empty()) throw ReportError("out_dir is required");
    std::vector<MetricsRecord> records = complete_metrics(store);
    fs::create_directories(options.out_dir);
    fs::path out(options.out_dir);

    auto strategies = strategies_present(records);
    unsigned main_grouping = options.main_grouping ? options.main_grouping
                                                   : (kGroupByModel | kGroupByStrategy);
    auto by_model = sorted_rows(aggregate(records, main_grouping));
    auto by_cell = sorted_rows(aggregate(records, kGroupByCell | kGroupByStrategy));

    write_file(out / "main_results.csv", main_results_csv(by_model));
    write_file(out / "full_results.csv", full_results_csv(by_model));
    write_file(out / "vuln_gap.csv", vuln_gap_csv(by_model));
    write_file(out / "context_grid.csv",
               context_grid_csv(by_cell, options.low_sample_threshold));
    write_file(out / "sensitivity.csv", sensitivity_csv(records, strategies));
    write_file(out / "pareto.json", pareto_json(store, records, options).dump(2) + "\n");
    write_file(out / "main_results.md", main_results_md(by_model, strategies));
    write_file(out / "context_grid.md",
               context_grid_md(by_cell, strategies, options.low_sample_threshold));

    json meta;
    meta["config_digest"] = store.read_meta("config_digest").value_or("unknown");
    meta["n_complete"] = records.size();
    ScanFilter failed_filter;
    failed_filter.status = TrialStatus::failed;
    meta["n_failed"] = store.scan(failed_filter).size();
    meta["seed"] = options.seed;
    meta["bootstrap_resamples"] = options.bootstrap_resamples;
    write_file(out / "report_meta.json", meta.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

namespace {

json test_result_json(const TestResult& t) {
    json j;
    j["statistic"] = t.statistic;
    j["p_value"] = t.p_value;
    if (t.effect_size) j["effect_size"] = *t.effect_size;
    j["method"] = t.method;
    j["n_effective"] = t.n_effective;
    return j;
}

}  // namespace

void write_stats(const RecordStore& store, const StatsOptions& options) {
    if (options.out_path.empty()) throw ReportError("out_path is required");
    ScanFilter filter;
    filter.status = TrialStatus::complete;
    std::vector<TrialRecord> records = store.scan(filter);
    if (records.empty()) throw ReportError("no complete trials");

    std::vector<MetricsRecord> metrics;
    metrics.reserve(records.size());
    for (const auto& r : records) metrics.push_back(metrics_record(r));
    auto strategies = strategies_present(metrics);

    json out;
    out["config_digest"] = store.read_meta("config_digest").value_or("unknown");

    // Kruskal-Wallis over strategies, pooled across models
    if (strategies.size() < 2) {
        out["kruskal_wallis"] = {{"note", "insufficient groups"}};
    } else {
        std::vector<std::vector<double>> groups;
        for (const auto& s : strategies) {
            std::vector<double> g;
            for (const auto& m : metrics)
                if (m.strategy == s) g.push_back(m.m.isad_p);
            groups.push_back(std::move(g));
        }
        try {
            json j = test_result_json(kruskal_wallis(groups));
            j["groups"] = strategies;
            out["kruskal_wallis"] = j;
        } catch (const StatsError& e) {
            out["kruskal_wallis"] = {{"note", e.what()}};
        }
    }

    // Variance decomposition of isad_p over scenario/strategy/model
    {
        std::vector<FactorObservation> obs;
        for (const auto& m : metrics)
            obs.push_back({m.scenario_id, m.strategy, m.model, m.m.isad_p});
        try {
            VarianceShares shares = variance_decomposition(obs);
            out["variance_decomposition"] = {{"scenario", shares.scenario_share},
                                             {"strategy", shares.strategy_share},
                                             {"model", shares.model_share},
                                             {"residual", shares.residual_share},
                                             {"degenerate", shares.degenerate}};
        } catch (const StatsError& e) {
            out["variance_decomposition"] = {{"note", e.what()}};
        }
    }

    // Pairwise Wilcoxon per model, scenario-paired, Bonferroni over pairs
    {
        std::set<std::string> model_set;
        for (const auto& m : metrics) model_set.insert(m.model);
        std::map<std::tuple<std::string, std::string, std::string>, double> isad_by_key;
        for (const auto& m : metrics)
            isad_by_key[{m.model, m.strategy, m.scenario_id}] = m.m.isad_p;

        json tests = json::array();
        int n_pairs = int(strategies.size() * (strategies.size() - 1) / 2);
        for (const auto& model : model_set) {
            for (std::size_t i = 0; i < strategies.size(); ++i) {
                for (std::size_t j = i + 1; j < strategies.size(); ++j) {
                    const std::string& a = strategies[i];
                    const std::string& b = strategies[j];
                    PairedSample sample;
                    double delta_sum = 0.0;
                    for (const auto& m : metrics) {
                        if (m.model != model || m.strategy != a) continue;
                        auto it = isad_by_key.find({model, b, m.scenario_id});
                        if (it == isad_by_key.end()) continue;
                        double d = m.m.isad_p - it->second;
                        sample.diffs.push_back(d);
                        delta_sum += d;
                    }
                    json entry;
                    entry["model"] = model;
                    entry["a"] = a;
                    entry["b"] = b;
                    entry["n_pairs"] = sample.diffs.size();
                    entry["delta"] = sample.diffs.empty()
                                         ? 0.0
                                         : delta_sum / double(sample.diffs.size());
                    try {
                        TestResult t = wilcoxon_signed_rank(sample);
                        entry["statistic"] = t.statistic;
                        entry["p_raw"] = t.p_value;
                        entry["p_bonferroni"] = bonferroni(t.p_value, n_pairs);
                        entry["rank_biserial"] = t.effect_size.value_or(0.0);
                        entry["n_effective"] = t.n_effective;
                        entry["method"] = t.method;
                    } catch (const StatsError& e) {
                        entry["note"] = e.what();
                    }
                    tests.push_back(entry);
                }
            }
        }
        out["pairwise_wilcoxon"] = tests;
        out["bonferroni_m"] = n_pairs;
    }

    // Reply length (stage1 completion tokens) and covertness between
    // suppress and pseudonymize
    {
        auto stage1_tokens = [](const TrialRecord& r) -> std::optional<double> {
            for (const auto& c : r.token_counts)
                if (c.tag == "stage1") return double(c.completion_tokens);
            return std::nullopt;
        };
        std::vector<double> supp_tokens, pseudo_tokens, supp_covert, pseudo_covert;
        for (const auto& r : records) {
            std::string s = r.strategy_name();
            if (s != "suppress" && s != "pseudonymize") continue;
            auto tokens = stage1_tokens(r);
            if (s == "suppress") {
                if (tokens) supp_tokens.push_back(*tokens);
                supp_covert.push_back(double(r.covertness.covertness_detection));
            } else {
                if (tokens) pseudo_tokens.push_back(*tokens);
                pseudo_covert.push_back(double(r.covertness.covertness_detection));
            }
        }
        json cmp;
        auto mean_of = [](const std::vector<double>& v) -> json {
            if (v.empty()) return nullptr;
            double s = 0.0;
            for (double x : v) s += x;
            return s / double(v.size());
        };
        cmp["suppress_mean_tokens"] = mean_of(supp_tokens);
        cmp["pseudonymize_mean_tokens"] = mean_of(pseudo_tokens);
        cmp["suppress_mean_covertness"] = mean_of(supp_covert);
        cmp["pseudonymize_mean_covertness"] = mean_of(pseudo_covert);
        try {
            cmp["token_length_welch"] = test_result_json(welch_t(pseudo_tokens, supp_tokens));
        } catch (const StatsError& e) {
            cmp["token_length_welch"] = {{"note", e.what()}};
        }
        try {
            cmp["covertness_welch"] = test_result_json(welch_t(pseudo_covert, supp_covert));
        } catch (const StatsError& e) {
            cmp["covertness_welch"] = {{"note", e.what()}};
        }
        out["length_covertness"] = cmp;
    }

    // Krippendorff's alpha across judge models, pooling this store with
    // the re-judged stores passed on the command line
    if (!options.judge_store_dirs.empty()) {
        std::vector<TrialRecord> pooled = records;
        for (const auto& dir : options.judge_store_dirs) {
            RecordStore other(dir);
            for (const auto& r : other.scan(filter)) pooled.push_back(r);
        }
        std::set<std::string> judges;
        for (const auto& r : pooled) judges.insert(r.judge_model);
        if (judges.size() < 2) {
            out["judge_agreement"] = {{"note", "fewer than 2 judge models across stores"}};
        } else {
            std::vector<std::string> judge_list(judges.begin(), judges.end());
            std::map<std::string, std::size_t> judge_index;
            for (std::size_t i = 0; i < judge_list.size(); ++i)
                judge_index[judge_list[i]] = i;

            std::map<std::string, std::size_t> item_index;
            for (const auto& r : pooled) {
                std::string item = r.scenario_snapshot.id + "/" + r.strategy_name() + "/" +
                                   r.agent_model();
                if (!item_index.count(item)) item_index[item] = item_index.size();
            }
            auto alpha_for = [&](auto value_fn) -> double {
                RatingsMatrix m;
                m.ratings.assign(judge_list.size(),
                                 std::vector<std::optional<double>>(item_index.size()));
                for (const auto& r : pooled) {
                    std::string item = r.scenario_snapshot.id + "/" + r.strategy_name() + "/" +
                                       r.agent_model();
                    m.ratings[judge_index[r.judge_model]][item_index[item]] = value_fn(r);
                }
                return krippendorff_alpha_interval(m);
            };
            json agreement;
            agreement["raters"] = judge_list;
            try {
                agreement["hls_p"] = alpha_for(
                    [](const TrialRecord& r) { return trial_metrics(r).hls_p; });
                agreement["hls_s"] = alpha_for(
                    [](const TrialRecord& r) { return trial_metrics(r).hls_s; });
                agreement["utility"] = alpha_for(
                    [](const TrialRecord& r) { return trial_metrics(r).util; });
                agreement["isad_p"] = alpha_for(
                    [](const TrialRecord& r) { return trial_metrics(r).isad_p; });
            } catch (const StatsError& e) {
                agreement["note"] = e.what();
            }
            out["judge_agreement"] = agreement;
        }
    }

    fs::path path(options.out_path);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file(path, out.dump(2) + "\n");
}

}  // namespace infosuff
