#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "infosuff/provider.hpp"
#include "infosuff/scenario.hpp"

namespace infosuff {

struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bumped whenever a prompt template or the message assembly changes, so
// stale trial records cannot be silently reused.
inline constexpr const char* kProtocolVersion = "1";

enum class StrategyCondition { no_protection, suppress, generalize, pseudonymize };

std::string to_string(StrategyCondition s);
StrategyCondition strategy_from_string(const std::string& s);
// All four conditions in canonical order.
const std::vector<StrategyCondition>& all_strategies();

// Fake substitutes for one scenario's high-sensitivity attributes, plus
// the user context rewritten to use them.
struct PseudoPlan {
    std::map<std::string, std::string> substitutes;  // attribute key -> fake value
    std::string rewritten_context;
};

enum class Speaker { receiver, agent };

struct Turn {
    Speaker speaker = Speaker::receiver;
    int index = 0;
    std::string text;
    std::optional<std::string> call_digest;  // absent for the incoming message
};

struct Transcript {
    std::vector<Turn> turns;  // m_r, m1, f1, m2, f2, m3
    std::string trial_id;
    StrategyCondition strategy = StrategyCondition::no_protection;
    std::string agent_model;
    std::string receiver_model;
    std::optional<PseudoPlan> pseudo_plan;  // present iff strategy == pseudonymize
};

// Throws on violated alternation/length/pseudo-plan invariants.
void validate_transcript(const Transcript& t, int follow_up_rounds = 2);

std::string make_trial_id(const std::string& scenario_id, StrategyCondition strategy,
                          const std::string& agent_model, const std::string& receiver_model,
                          const std::string& protocol_version = kProtocolVersion);

struct TrialSetup {
    Scenario scenario;
    StrategyCondition strategy = StrategyCondition::no_protection;
    std::string agent_model;
    std::string receiver_model;
    int follow_up_rounds = 2;
    double agent_temperature = 0.7;
    double receiver_temperature = 0.7;
    double planner_temperature = 0.0;
    std::optional<int> max_tokens;  // generation calls only; judges run unbounded
};

// Conversation rendering shared by judges and the adversary:
// "Receiver:"/"User:"-labeled lines, one per turn, joined by newlines.
std::string render_turns(const std::vector<Turn>& turns, std::size_t count);
std::string render_transcript(const Transcript& t);
// The (m_r, m1) prefix used for static evaluation.
std::string static_view(const Transcript& t);

// Strips a known preamble label ("Here's my reply:", "Reply:", "Message:")
// and trims. Anything else is left intact.
std::string sanitize_reply(const std::string& raw);

// Outgoing-request builders. Public so that scripted runs and the prompt
// hygiene checks can reproduce requests without a live pipeline.
ChatRequest agent_request(const TrialSetup& setup, const std::optional<PseudoPlan>& plan,
                          const std::vector<Turn>& history);
ChatRequest receiver_request(const TrialSetup& setup, const std::vector<Turn>& history);
ChatRequest planner_request(const Scenario& scenario, const std::string& model,
                            double temperature,
                            const std::vector<std::string>& prior_violations = {});

// Asks the provider for fake substitutes, enforcing the plan invariants;
// retries once with the violations appended, then throws.
PseudoPlan plan_pseudonyms(const Scenario& scenario, Provider& provider,
                           const std::string& model, double temperature = 0.0);

// Stage 1 + Stage 2: strategy-conditioned first reply, then alternating
// receiver follow-ups and agent replies.
Transcript run_trial(const TrialSetup& setup, Provider& agent_provider,
                     Provider& receiver_provider);

}  // namespace infosuff
