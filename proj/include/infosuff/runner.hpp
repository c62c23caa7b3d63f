#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "infosuff/config.hpp"
#include "infosuff/provider.hpp"
#include "infosuff/record_store.hpp"
#include "infosuff/scenario.hpp"

namespace infosuff {

// One provider handle per model id. Scripted runs share one instance.
struct ProviderSet {
    std::map<std::string, std::shared_ptr<Provider>> by_model;

    Provider& for_model(const std::string& model) const;
};

ProviderSet build_providers(const RunConfig& config);

struct TrialTuning {
    int follow_up_rounds = 2;
    double agent_temperature = 0.7;
    double receiver_temperature = 0.7;
    double planner_temperature = 0.0;
    double judge_temperature = 0.0;
    std::optional<int> max_tokens;
};

// Runs the full three-stage pipeline for one trial. Never throws for
// per-trial problems: failures come back as a failed record carrying the
// stage and message.
TrialRecord execute_trial(const Scenario& scenario, StrategyCondition strategy,
                          const std::string& agent_model, const std::string& receiver_model,
                          const std::string& judge_model, Provider& agent_provider,
                          Provider& receiver_provider, Provider& judge_provider,
                          const TrialTuning& tuning,
                          const std::function<std::int64_t()>& clock);

struct RunOptions {
    std::function<std::int64_t()> clock;                   // defaults to wall clock
    std::function<void(const std::string&)> progress;      // defaults to stdout
    std::optional<std::size_t> max_trials;                 // stop after this many (for tests)
};

struct RunSummary {
    std::size_t completed = 0;
    std::size_t failed = 0;
    std::size_t pending_before = 0;
};

// Executes every pending trial with a bounded worker pool; each finished
// record is funneled through one serialized appender.
RunSummary run_trials(const RunConfig& config, const ScenarioSet& corpus, RecordStore& store,
                      const ProviderSet& providers, const RunOptions& options = {});

}  // namespace infosuff
