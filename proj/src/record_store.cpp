#include "infosuff/record_store.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace infosuff {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json turn_to_json(const Turn& t) {
    json j;
    j["speaker"] = t.speaker == Speaker::receiver ? "receiver" : "agent";
    j["index"] = t.index;
    j["text"] = t.text;
    if (t.call_digest) j["call_digest"] = *t.call_digest;
    return j;
}

Turn turn_from_json(const json& j) {
    Turn t;
    t.speaker = j.at("speaker").get<std::string>() == "receiver" ? Speaker::receiver
                                                                 : Speaker::agent;
    t.index = j.at("index").get<int>();
    t.text = j.at("text").get<std::string>();
    if (j.contains("call_digest")) t.call_digest = j.at("call_digest").get<std::string>();
    return t;
}

json transcript_to_json(const Transcript& t) {
    json j;
    j["trial_id"] = t.trial_id;
    j["strategy"] = to_string(t.strategy);
    j["agent_model"] = t.agent_model;
    j["receiver_model"] = t.receiver_model;
    j["turns"] = json::array();
    for (const auto& turn : t.turns) j["turns"].push_back(turn_to_json(turn));
    if (t.pseudo_plan) {
        json plan;
        plan["substitutes"] = t.pseudo_plan->substitutes;
        plan["rewritten_context"] = t.pseudo_plan->rewritten_context;
        j["pseudo_plan"] = plan;
    }
    return j;
}

Transcript transcript_from_json(const json& j) {
    Transcript t;
    t.trial_id = j.at("trial_id").get<std::string>();
    t.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    t.agent_model = j.at("agent_model").get<std::string>();
    t.receiver_model = j.at("receiver_model").get<std::string>();
    for (const auto& turn : j.at("turns")) t.turns.push_back(turn_from_json(turn));
    if (j.contains("pseudo_plan")) {
        PseudoPlan plan;
        for (auto it = j["pseudo_plan"]["substitutes"].begin();
             it != j["pseudo_plan"]["substitutes"].end(); ++it)
            plan.substitutes[it.key()] = it.value().get<std::string>();
        plan.rewritten_context = j["pseudo_plan"]["rewritten_context"].get<std::string>();
        t.pseudo_plan = std::move(plan);
    }
    return t;
}

json guess_to_json(const AdversaryGuess& g) {
    json j;
    j["key"] = g.key;
    j["inferred_value"] = g.inferred_value ? json(*g.inferred_value) : json(nullptr);
    j["inferred_category"] = g.inferred_category ? json(*g.inferred_category) : json(nullptr);
    j["confidence"] = to_string(g.confidence);
    j["cannot_determine"] = g.cannot_determine;
    j["reasoning"] = g.reasoning;
    return j;
}

AdversaryGuess guess_from_json(const json& j) {
    AdversaryGuess g;
    g.key = j.at("key").get<std::string>();
    if (j.contains("inferred_value") && j.at("inferred_value").is_string())
        g.inferred_value = j.at("inferred_value").get<std::string>();
    if (j.contains("inferred_category") && j.at("inferred_category").is_string())
        g.inferred_category = j.at("inferred_category").get<std::string>();
    g.confidence = confidence_from_string(j.at("confidence").get<std::string>());
    g.cannot_determine = j.at("cannot_determine").get<bool>();
    g.reasoning = j.value("reasoning", "");
    return g;
}

json scenario_snapshot_to_json(const Scenario& s) {
    return json::parse(serialize_scenario(s));
}

Scenario scenario_snapshot_from_json(const json& j) {
    std::istringstream line(j.dump() + "\n");
    ScenarioSet set = load_corpus(line);
    if (set.scenarios.size() != 1) throw StoreError("bad scenario snapshot");
    return set.scenarios[0];
}

}  // namespace

std::string serialize_record(const TrialRecord& r) {
    json j;
    j["trial_id"] = r.trial_id;
    j["protocol_version"] = r.protocol_version;
    j["scenario"] = scenario_snapshot_to_json(r.scenario_snapshot);
    j["transcript"] = transcript_to_json(r.transcript);
    j["judge_model"] = r.judge_model;
    j["status"] = r.status == TrialStatus::complete ? "complete" : "failed";
    if (r.status == TrialStatus::failed) {
        j["failure_stage"] = r.failure_stage;
        j["failure_message"] = r.failure_message;
    }
    j["guesses_static"] = json::array();
    for (const auto& g : r.guesses_static) j["guesses_static"].push_back(guess_to_json(g));
    j["guesses_probed"] = json::array();
    for (const auto& g : r.guesses_probed) j["guesses_probed"].push_back(guess_to_json(g));
    j["classes_static"] = json::array();
    for (auto c : r.classes_static) j["classes_static"].push_back(to_string(c));
    j["classes_probed"] = json::array();
    for (auto c : r.classes_probed) j["classes_probed"].push_back(to_string(c));
    j["utility"] = {{"goal_achieved", r.utility.goal_achieved},
                    {"receiver_satisfied", r.utility.receiver_satisfied},
                    {"reason", r.utility.reason}};
    j["covertness"] = {{"covertness_detection", r.covertness.covertness_detection},
                       {"signals", r.covertness.signals}};
    j["naturalness"] = {{"flow_naturalness", r.naturalness.flow_naturalness},
                        {"user_plausibility", r.naturalness.user_plausibility},
                        {"reason", r.naturalness.reason}};
    j["strategy_label"] = {{"strategy", to_string(r.strategy_label.strategy)},
                           {"confidence", to_string(r.strategy_label.confidence)},
                           {"signals", r.strategy_label.signals}};
    j["token_counts"] = json::array();
    for (const auto& t : r.token_counts)
        j["token_counts"].push_back({{"tag", t.tag},
                                     {"prompt_tokens", t.prompt_tokens},
                                     {"completion_tokens", t.completion_tokens}});
    j["started_at_ms"] = r.started_at_ms;
    j["finished_at_ms"] = r.finished_at_ms;
    return j.dump();
}

TrialRecord parse_record(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw StoreError(std::string("corrupt record line: ") + e.what());
    }
    try {
        TrialRecord r;
        r.trial_id = j.at("trial_id").get<std::string>();
        r.protocol_version = j.value("protocol_version", "");
        r.scenario_snapshot = scenario_snapshot_from_json(j.at("scenario"));
        r.transcript = transcript_from_json(j.at("transcript"));
        r.judge_model = j.value("judge_model", "");
        r.status = j.at("status").get<std::string>() == "complete" ? TrialStatus::complete
                                                                   : TrialStatus::failed;
        r.failure_stage = j.value("failure_stage", "");
        r.failure_message = j.value("failure_message", "");
        for (const auto& g : j.at("guesses_static")) r.guesses_static.push_back(guess_from_json(g));
        for (const auto& g : j.at("guesses_probed")) r.guesses_probed.push_back(guess_from_json(g));
        for (const auto& c : j.at("classes_static"))
            r.classes_static.push_back(recovery_from_string(c.get<std::string>()));
        for (const auto& c : j.at("classes_probed"))
            r.classes_probed.push_back(recovery_from_string(c.get<std::string>()));
        r.utility.goal_achieved = j.at("utility").value("goal_achieved", 0);
        r.utility.receiver_satisfied = j.at("utility").value("receiver_satisfied", 0);
        r.utility.reason = j.at("utility").value("reason", "");
        r.covertness.covertness_detection = j.at("covertness").value("covertness_detection", 0);
        r.covertness.signals = j.at("covertness").value("signals", "");
        r.naturalness.flow_naturalness = j.at("naturalness").value("flow_naturalness", 0);
        r.naturalness.user_plausibility = j.at("naturalness").value("user_plausibility", 0);
        r.naturalness.reason = j.at("naturalness").value("reason", "");
        r.strategy_label.strategy =
            strategy_guess_from_string(j.at("strategy_label").at("strategy").get<std::string>());
        r.strategy_label.confidence =
            confidence_from_string(j.at("strategy_label").at("confidence").get<std::string>());
        r.strategy_label.signals = j.at("strategy_label").value("signals", "");
        for (const auto& t : j.at("token_counts")) {
            CallTokens ct;
            ct.tag = t.at("tag").get<std::string>();
            ct.prompt_tokens = t.at("prompt_tokens").get<std::int64_t>();
            ct.completion_tokens = t.at("completion_tokens").get<std::int64_t>();
            r.token_counts.push_back(std::move(ct));
        }
        r.started_at_ms = j.value("started_at_ms", std::int64_t(0));
        r.finished_at_ms = j.value("finished_at_ms", std::int64_t(0));
        return r;
    } catch (const json::exception& e) {
        throw StoreError(std::string("corrupt record line: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

RecordStore::RecordStore(const std::string& dir) : dir_(dir) {
    fs::create_directories(dir_);
    records_path_ = (fs::path(dir_) / "records.jsonl").string();
    load();
}

void RecordStore::load() {
    index_.clear();

    // recover a staged append the writer did not get to apply
    fs::path journal = fs::path(dir_) / "journal.apply";
    std::optional<std::string> staged;
    if (fs::exists(journal)) {
        std::ifstream f(journal, std::ios::binary);
        std::ostringstream buf;
        buf << f.rdbuf();
        staged = buf.str();
    }

    if (fs::exists(records_path_)) {
        std::ifstream f(records_path_, std::ios::binary);
        std::string content((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());
        std::size_t start = 0;
        while (start < content.size()) {
            std::size_t nl = content.find('\n', start);
            if (nl == std::string::npos) break;  // torn trailing line from a crash: drop it
            std::string line = content.substr(start, nl - start);
            start = nl + 1;
            if (line.empty()) continue;
            TrialRecord r = parse_record(line);
            index_[r.trial_id] = std::move(r);  // later lines supersede earlier ones
        }
    }

    if (staged) {
        std::string line = *staged;
        while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
        if (!line.empty()) {
            TrialRecord r = parse_record(line);
            if (!index_.count(r.trial_id)) {
                append_line(line);
                index_[r.trial_id] = std::move(r);
            }
        }
        std::error_code ec;
        fs::remove(journal, ec);
    }
}

void RecordStore::append_line(const std::string& line) {
    // stage first so a torn append can be recovered
    fs::path tmp = fs::path(dir_) / "journal.tmp";
    fs::path journal = fs::path(dir_) / "journal.apply";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw StoreError("cannot write journal in " + dir_);
        f << line << '\n';
        f.flush();
        if (!f.good()) throw StoreError("journal write failed in " + dir_);
    }
    std::error_code ec;
    fs::rename(tmp, journal, ec);
    if (ec) throw StoreError("journal rename failed in " + dir_);

    {
        std::ofstream f(records_path_, std::ios::binary | std::ios::app);
        if (!f) throw StoreError("cannot append to " + records_path_);
        f << line << '\n';
        f.flush();
        if (!f.good()) throw StoreError("append failed on " + records_path_);
    }
    fs::remove(journal, ec);
}

void RecordStore::put(const TrialRecord& record) {
    std::string line = serialize_record(record);
    auto it = index_.find(record.trial_id);
    if (it != index_.end()) {
        if (serialize_record(it->second) == line) return;  // identical re-put
        if (it->second.status == TrialStatus::complete)
            throw StoreError("trial_id conflict: " + record.trial_id +
                             " already stored with different content");
        // superseding a failed attempt is allowed
    }
    append_line(line);
    index_[record.trial_id] = record;
}

std::vector<TrialRecord> RecordStore::scan(const ScanFilter& filter) const {
    std::vector<TrialRecord> out;
    for (const auto& [id, r] : index_) {
        if (filter.model && r.agent_model() != *filter.model) continue;
        if (filter.strategy && r.strategy_name() != *filter.strategy) continue;
        if (filter.status && r.status != *filter.status) continue;
        out.push_back(r);
    }
    return out;  // index_ is keyed by trial_id, so this is already sorted
}

bool RecordStore::has_complete(const std::string& trial_id) const {
    auto it = index_.find(trial_id);
    return it != index_.end() && it->second.status == TrialStatus::complete;
}

void RecordStore::write_meta(const std::string& key, const std::string& value) {
    fs::path meta_path = fs::path(dir_) / "meta.json";
    json meta = json::object();
    if (fs::exists(meta_path)) {
        std::ifstream f(meta_path, std::ios::binary);
        try {
            f >> meta;
        } catch (const json::exception&) {
            meta = json::object();
        }
    }
    meta[key] = value;
    fs::path tmp = fs::path(dir_) / "meta.json.tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f << meta.dump(2) << '\n';
    }
    std::error_code ec;
    fs::rename(tmp, meta_path, ec);
}

std::optional<std::string> RecordStore::read_meta(const std::string& key) const {
    fs::path meta_path = fs::path(dir_) / "meta.json";
    if (!fs::exists(meta_path)) return std::nullopt;
    std::ifstream f(meta_path, std::ios::binary);
    json meta;
    try {
        f >> meta;
    } catch (const json::exception&) {
        return std::nullopt;
    }
    if (!meta.contains(key) || !meta[key].is_string()) return std::nullopt;
    return meta[key].get<std::string>();
}

// ---------------------------------------------------------------------------

std::vector<TrialSpec> pending_trials(const ScenarioSet& corpus,
                                      const std::vector<StrategyCondition>& strategies,
                                      const std::vector<std::string>& agent_models,
                                      const std::string& receiver_model,
                                      const RecordStore& store) {
    std::vector<TrialSpec> out;
    for (const auto& scenario : corpus.scenarios) {
        for (auto strategy : strategies) {
            bool incompatible = std::find(scenario.incompatible_conditions.begin(),
                                          scenario.incompatible_conditions.end(),
                                          to_string(strategy)) !=
                                scenario.incompatible_conditions.end();
            if (incompatible) continue;
            for (const auto& model : agent_models) {
                TrialSpec spec;
                spec.scenario_id = scenario.id;
                spec.strategy = strategy;
                spec.agent_model = model;
                spec.receiver_model = receiver_model;
                spec.trial_id = make_trial_id(scenario.id, strategy, model, receiver_model);
                if (!store.has_complete(spec.trial_id)) out.push_back(std::move(spec));
            }
        }
    }
    return out;
}

}  // namespace infosuff
