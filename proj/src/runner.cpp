#include "infosuff/runner.hpp"

#include <atomic>
#include <exception>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "infosuff/evaluation.hpp"
#include "infosuff/util.hpp"

namespace infosuff {

Provider& ProviderSet::for_model(const std::string& model) const {
    auto it = by_model.find(model);
    if (it == by_model.end()) throw ProviderError("no provider for model: " + model);
    return *it->second;
}

ProviderSet build_providers(const RunConfig& config) {
    ProviderSet set;
    if (config.provider == ProviderKind::scripted) {
        auto scripted = std::make_shared<ScriptedProvider>(
            Script::from_json_file(config.script_path));
        for (const auto& m : config.agent_models) set.by_model[m] = scripted;
        set.by_model[config.receiver_model] = scripted;
        set.by_model[config.judge_model] = scripted;
        return set;
    }

    auto make_http = [&](const std::string& model) -> std::shared_ptr<Provider> {
        const EndpointSpec& spec = config.endpoints.at(model);
        Endpoint ep;
        ep.base_url = spec.base_url;
        if (!spec.key_env.empty()) {
            const char* key = std::getenv(spec.key_env.c_str());
            if (key) ep.api_key = key;
        }
        std::shared_ptr<Provider> p = std::make_shared<HttpProvider>(ep, config.retry);
        if (!config.cache_dir.empty())
            p = std::make_shared<CachedProvider>(p, config.cache_dir,
                                                 std::optional<std::uint64_t>(config.seed));
        return p;
    };
    for (const auto& m : config.agent_models)
        if (!set.by_model.count(m)) set.by_model[m] = make_http(m);
    if (!set.by_model.count(config.receiver_model))
        set.by_model[config.receiver_model] = make_http(config.receiver_model);
    if (!set.by_model.count(config.judge_model))
        set.by_model[config.judge_model] = make_http(config.judge_model);
    return set;
}

namespace {

// Captures per-call token usage while forwarding to the real provider.
class TokenTally : public Provider {
 public:
    explicit TokenTally(Provider& inner) : inner_(inner) {}

    ProviderResponse complete(const ChatRequest& request) override {
        ProviderResponse resp = inner_.complete(request);
        std::lock_guard<std::mutex> lock(mu_);
        calls_.push_back({request.tag, resp.prompt_tokens, resp.completion_tokens});
        return resp;
    }

    std::vector<CallTokens> calls() const {
        std::lock_guard<std::mutex> lock(mu_);
        return calls_;
    }

 private:
    Provider& inner_;
    mutable std::mutex mu_;
    std::vector<CallTokens> calls_;
};

std::pair<std::string, std::string> split_failure(const std::string& what,
                                                  const std::string& fallback_stage) {
    if (what.rfind("stage=", 0) == 0) {
        auto colon = what.find(':');
        if (colon != std::string::npos) {
            std::string stage = what.substr(6, colon - 6);
            auto comma = stage.find(',');
            if (comma != std::string::npos) stage = stage.substr(0, comma);
            return {stage, trim(what.substr(colon + 1))};
        }
    }
    return {fallback_stage, what};
}

}  // namespace

TrialRecord execute_trial(const Scenario& scenario, StrategyCondition strategy,
                          const std::string& agent_model, const std::string& receiver_model,
                          const std::string& judge_model, Provider& agent_provider,
                          Provider& receiver_provider, Provider& judge_provider,
                          const TrialTuning& tuning,
                          const std::function<std::int64_t()>& clock) {
    TrialRecord record;
    record.trial_id = make_trial_id(scenario.id, strategy, agent_model, receiver_model);
    record.protocol_version = kProtocolVersion;
    record.scenario_snapshot = scenario;
    record.judge_model = judge_model;
    record.started_at_ms = clock();
    // filterable metadata even when the trial fails before any turn
    record.transcript.trial_id = record.trial_id;
    record.transcript.strategy = strategy;
    record.transcript.agent_model = agent_model;
    record.transcript.receiver_model = receiver_model;

    TokenTally agent_tally(agent_provider);
    TokenTally receiver_tally(receiver_provider);
    TokenTally judge_tally(judge_provider);

    auto fail = [&](const std::string& stage, const std::string& message) {
        record.status = TrialStatus::failed;
        auto [parsed_stage, parsed_message] = split_failure(message, stage);
        record.failure_stage = parsed_stage;
        record.failure_message = parsed_message;
        record.finished_at_ms = clock();
        for (const auto& c : agent_tally.calls()) record.token_counts.push_back(c);
        for (const auto& c : receiver_tally.calls()) record.token_counts.push_back(c);
        for (const auto& c : judge_tally.calls()) record.token_counts.push_back(c);
        return record;
    };

    TrialSetup setup;
    setup.scenario = scenario;
    setup.strategy = strategy;
    setup.agent_model = agent_model;
    setup.receiver_model = receiver_model;
    setup.follow_up_rounds = tuning.follow_up_rounds;
    setup.agent_temperature = tuning.agent_temperature;
    setup.receiver_temperature = tuning.receiver_temperature;
    setup.planner_temperature = tuning.planner_temperature;
    setup.max_tokens = tuning.max_tokens;

    try {
        record.transcript = run_trial(setup, agent_tally, receiver_tally);
    } catch (const std::exception& e) {
        return fail("protocol", e.what());
    }

    const auto attrs = scenario.high_sensitivity_attributes();
    const std::string probed = render_transcript(record.transcript);
    const std::string first_view = static_view(record.transcript);

    try {
        record.guesses_static = infer_attributes(first_view, attrs, judge_tally, judge_model,
                                                 "adversary_static", tuning.judge_temperature);
        for (std::size_t i = 0; i < attrs.size(); ++i)
            record.classes_static.push_back(
                classify_recovery(record.guesses_static[i], attrs[i], judge_tally, judge_model,
                                  tuning.judge_temperature));
    } catch (const std::exception& e) {
        return fail("adversary_static", e.what());
    }
    try {
        record.guesses_probed = infer_attributes(probed, attrs, judge_tally, judge_model,
                                                 "adversary_probed", tuning.judge_temperature);
        for (std::size_t i = 0; i < attrs.size(); ++i)
            record.classes_probed.push_back(
                classify_recovery(record.guesses_probed[i], attrs[i], judge_tally, judge_model,
                                  tuning.judge_temperature));
    } catch (const std::exception& e) {
        return fail("adversary_probed", e.what());
    }
    try {
        record.utility = judge_utility(probed, scenario, judge_tally, judge_model,
                                       tuning.judge_temperature);
        record.covertness =
            judge_covertness(probed, judge_tally, judge_model, tuning.judge_temperature);
        record.naturalness =
            judge_naturalness(probed, judge_tally, judge_model, tuning.judge_temperature);
        record.strategy_label = classify_strategy(record.transcript.turns.at(1).text,
                                                  judge_tally, judge_model,
                                                  tuning.judge_temperature);
    } catch (const std::exception& e) {
        return fail("judgment", e.what());
    }

    record.status = TrialStatus::complete;
    record.finished_at_ms = clock();
    for (const auto& c : agent_tally.calls()) record.token_counts.push_back(c);
    for (const auto& c : receiver_tally.calls()) record.token_counts.push_back(c);
    for (const auto& c : judge_tally.calls()) record.token_counts.push_back(c);
    return record;
}

RunSummary run_trials(const RunConfig& config, const ScenarioSet& corpus, RecordStore& store,
                      const ProviderSet& providers, const RunOptions& options) {
    std::function<std::int64_t()> clock = options.clock;
    if (!clock) clock = [] { return now_ms(); };
    std::function<void(const std::string&)> progress = options.progress;
    if (!progress) progress = [](const std::string& line) {
        std::printf("%s\n", line.c_str());
        std::fflush(stdout);
    };

    std::map<std::string, const Scenario*> by_id;
    for (const auto& s : corpus.scenarios) by_id[s.id] = &s;

    std::vector<TrialSpec> pending = pending_trials(corpus, config.strategies,
                                                    config.agent_models, config.receiver_model,
                                                    store);
    if (options.max_trials && pending.size() > *options.max_trials)
        pending.resize(*options.max_trials);

    TrialTuning tuning;
    tuning.follow_up_rounds = config.follow_up_rounds;
    tuning.agent_temperature = config.agent_temperature;
    tuning.receiver_temperature = config.receiver_temperature;
    tuning.planner_temperature = config.planner_temperature;
    tuning.judge_temperature = config.judge_temperature;
    tuning.max_tokens = config.max_tokens;

    RunSummary summary;
    summary.pending_before = pending.size();

    std::atomic<std::size_t> next{0};
    std::mutex store_mu;
    std::atomic<std::size_t> completed{0}, failed{0};
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const TrialSpec& spec = pending[i];
            const Scenario& scenario = *by_id.at(spec.scenario_id);
            TrialRecord record = execute_trial(
                scenario, spec.strategy, spec.agent_model, spec.receiver_model,
                config.judge_model, providers.for_model(spec.agent_model),
                providers.for_model(spec.receiver_model),
                providers.for_model(config.judge_model), tuning, clock);
            bool ok = record.status == TrialStatus::complete;
            try {
                std::lock_guard<std::mutex> lock(store_mu);
                store.put(record);
            } catch (...) {
                // store failures (unlike per-trial failures) abort the run
                std::lock_guard<std::mutex> lock(store_mu);
                if (!first_error) first_error = std::current_exception();
                next.store(pending.size());
                return;
            }
            if (ok)
                completed.fetch_add(1);
            else
                failed.fetch_add(1);
            progress((ok ? "done " : "FAILED ") + spec.scenario_id + " " +
                     to_string(spec.strategy) + " " + spec.agent_model +
                     (ok ? "" : " [" + record.failure_stage + "] " + record.failure_message));
        }
    };

    std::size_t threads = std::min<std::size_t>(std::size_t(config.concurrency),
                                                std::max<std::size_t>(pending.size(), 1));
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    summary.completed = completed.load();
    summary.failed = failed.load();
    store.write_meta("config_digest", config.config_digest);
    store.write_meta("seed", std::to_string(config.seed));
    return summary;
}

}  // namespace infosuff
