#include "infosuff/protocol.hpp"

#include <json.hpp>

#include "infosuff/prompts.hpp"
#include "infosuff/sha256.hpp"
#include "infosuff/util.hpp"

namespace infosuff {

using nlohmann::json;

std::string to_string(StrategyCondition s) {
    switch (s) {
        case StrategyCondition::no_protection: return "no_protection";
        case StrategyCondition::suppress: return "suppress";
        case StrategyCondition::generalize: return "generalize";
        case StrategyCondition::pseudonymize: return "pseudonymize";
    }
    return "no_protection";
}

StrategyCondition strategy_from_string(const std::string& s) {
    if (s == "no_protection") return StrategyCondition::no_protection;
    if (s == "suppress") return StrategyCondition::suppress;
    if (s == "generalize") return StrategyCondition::generalize;
    if (s == "pseudonymize") return StrategyCondition::pseudonymize;
    throw ProtocolError("unknown strategy condition: " + s);
}

const std::vector<StrategyCondition>& all_strategies() {
    static const std::vector<StrategyCondition> v = {
        StrategyCondition::no_protection, StrategyCondition::suppress,
        StrategyCondition::generalize, StrategyCondition::pseudonymize};
    return v;
}

void validate_transcript(const Transcript& t, int follow_up_rounds) {
    const std::size_t expected = 2 + 2 * std::size_t(follow_up_rounds);
    if (t.turns.size() != expected)
        throw ProtocolError("transcript has " + std::to_string(t.turns.size()) +
                            " turns, expected " + std::to_string(expected));
    for (std::size_t i = 0; i < t.turns.size(); ++i) {
        const Turn& turn = t.turns[i];
        if (turn.index != int(i))
            throw ProtocolError("turn index " + std::to_string(turn.index) + " at position " +
                                std::to_string(i));
        Speaker want = (i % 2 == 0) ? Speaker::receiver : Speaker::agent;
        if (turn.speaker != want)
            throw ProtocolError("speaker alternation broken at turn " + std::to_string(i));
        if (turn.text.empty())
            throw ProtocolError("empty text at turn " + std::to_string(i));
    }
    bool is_pseudo = t.strategy == StrategyCondition::pseudonymize;
    if (is_pseudo != t.pseudo_plan.has_value())
        throw ProtocolError("pseudo_plan must be present iff strategy is pseudonymize");
}

std::string make_trial_id(const std::string& scenario_id, StrategyCondition strategy,
                          const std::string& agent_model, const std::string& receiver_model,
                          const std::string& protocol_version) {
    std::string key = scenario_id;
    for (const std::string& part :
         {to_string(strategy), agent_model, receiver_model, protocol_version}) {
        key.push_back(0x1f);
        key += part;
    }
    return sha256_hex(key);
}

std::string render_turns(const std::vector<Turn>& turns, std::size_t count) {
    std::string out;
    for (std::size_t i = 0; i < count && i < turns.size(); ++i) {
        if (i) out += "\n";
        out += (turns[i].speaker == Speaker::receiver ? "Receiver: " : "User: ");
        out += turns[i].text;
    }
    return out;
}

std::string render_transcript(const Transcript& t) {
    return render_turns(t.turns, t.turns.size());
}

std::string static_view(const Transcript& t) { return render_turns(t.turns, 2); }

std::string sanitize_reply(const std::string& raw) {
    std::string text = trim(raw);
    static const std::vector<std::string> kPreambles = {"here's my reply", "reply", "message"};
    auto colon = text.find(':');
    if (colon != std::string::npos) {
        std::string label = to_lower(trim(text.substr(0, colon)));
        for (const auto& p : kPreambles) {
            if (label == p) {
                text = trim(text.substr(colon + 1));
                break;
            }
        }
    }
    return text;
}

// ---------------------------------------------------------------------------
// Request assembly

namespace {

std::string situation_block(const TrialSetup& setup, const std::optional<PseudoPlan>& plan) {
    const Scenario& s = setup.scenario;
    // In the pseudonymize condition the agent only ever sees the rewritten
    // context; the true values must not reach any outgoing request.
    const std::string& context =
        plan.has_value() ? plan->rewritten_context : s.user_context;
    std::string out;
    out += "You are: " + s.user_role + "\n";
    out += "You are talking to: " + s.receiver_role + "\n";
    out += "Your goal: " + s.user_goal + "\n\n";
    out += "Your private context:\n" + context + "\n\n";
    out += "Message from " + s.receiver_role + ":\n" + s.incoming_message;
    return out;
}

}  // namespace

ChatRequest agent_request(const TrialSetup& setup, const std::optional<PseudoPlan>& plan,
                          const std::vector<Turn>& history) {
    ChatRequest req;
    req.model = setup.agent_model;
    req.temperature = setup.agent_temperature;
    req.max_tokens = setup.max_tokens;
    req.tag = history.size() <= 1 ? "stage1" : "agent_followup";
    req.messages.push_back({Role::system, prompts::strategy_system(setup.strategy)});
    req.messages.push_back({Role::user, situation_block(setup, plan)});
    // history = m_r, m1, f1, ...; m_r is already inside the situation block
    for (std::size_t i = 1; i < history.size(); ++i) {
        const Turn& t = history[i];
        req.messages.push_back(
            {t.speaker == Speaker::agent ? Role::assistant : Role::user, t.text});
    }
    return req;
}

ChatRequest receiver_request(const TrialSetup& setup, const std::vector<Turn>& history) {
    if (history.size() % 2 != 0)
        throw ProtocolError("receiver turn requested at odd history length " +
                            std::to_string(history.size()));
    ChatRequest req;
    req.model = setup.receiver_model;
    req.temperature = setup.receiver_temperature;
    req.max_tokens = setup.max_tokens;
    req.tag = "receiver";
    req.messages.push_back({Role::system, prompts::receiver_system(setup.scenario)});
    req.messages.push_back({Role::user, render_turns(history, history.size())});
    return req;
}

ChatRequest planner_request(const Scenario& scenario, const std::string& model,
                            double temperature,
                            const std::vector<std::string>& prior_violations) {
    ChatRequest req;
    req.model = model;
    req.temperature = temperature;
    req.tag = "pseudo_plan";
    req.messages.push_back({Role::system, prompts::planner_system()});
    std::string user = prompts::planner_user(scenario);
    if (!prior_violations.empty()) {
        user += "\nYour previous plan was rejected:\n";
        for (const auto& v : prior_violations) user += "- " + v + "\n";
        user += "Produce a corrected plan. Output valid JSON only.";
    }
    req.messages.push_back({Role::user, std::move(user)});
    return req;
}

// ---------------------------------------------------------------------------
// Pseudonym planning

namespace {

std::vector<std::string> plan_violations(const PseudoPlan& plan, const Scenario& scenario) {
    std::vector<std::string> violations;
    for (const auto& a : scenario.high_sensitivity_attributes()) {
        auto it = plan.substitutes.find(a.key);
        if (it == plan.substitutes.end()) {
            violations.push_back("missing substitute: " + a.key);
            continue;
        }
        const std::string& fake = it->second;
        if (fake.empty()) {
            violations.push_back("empty substitute: " + a.key);
            continue;
        }
        if (contains_ci(fake, a.value) || contains_ci(a.value, fake))
            violations.push_back("substitute equals true value: " + a.key);
        if (contains_ci(fake, a.category) || contains_ci(a.category, fake))
            violations.push_back("substitute equals true category: " + a.key);
        if (contains_ci(plan.rewritten_context, a.value))
            violations.push_back("rewritten_context contains true value: " + a.key);
    }
    if (plan.rewritten_context.empty()) violations.push_back("rewritten_context is empty");
    return violations;
}

std::optional<PseudoPlan> parse_plan(const std::string& raw) {
    json j;
    try {
        j = json::parse(raw);
    } catch (const json::exception&) {
        return std::nullopt;
    }
    if (!j.is_object() || !j.contains("substitutes") || !j["substitutes"].is_object() ||
        !j.contains("rewritten_context") || !j["rewritten_context"].is_string())
        return std::nullopt;
    PseudoPlan plan;
    for (auto it = j["substitutes"].begin(); it != j["substitutes"].end(); ++it) {
        if (!it.value().is_string()) return std::nullopt;
        plan.substitutes[it.key()] = it.value().get<std::string>();
    }
    plan.rewritten_context = j["rewritten_context"].get<std::string>();
    return plan;
}

}  // namespace

PseudoPlan plan_pseudonyms(const Scenario& scenario, Provider& provider,
                           const std::string& model, double temperature) {
    if (scenario.high_sensitivity_attributes().empty())
        throw ProtocolError("scenario \"" + scenario.id +
                            "\" has no high-sensitivity attribute to pseudonymize");

    std::vector<std::string> violations;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ChatRequest req = planner_request(scenario, model, temperature, violations);
        ProviderResponse resp = provider.complete(req);
        auto plan = parse_plan(resp.text);
        if (!plan) {
            violations = {"output was not valid JSON with substitutes/rewritten_context"};
            continue;
        }
        violations = plan_violations(*plan, scenario);
        if (violations.empty()) return *plan;
    }
    throw ProtocolError("pseudonym plan rejected after retry: " + join(violations, "; "));
}

// ---------------------------------------------------------------------------
// Trial execution

Transcript run_trial(const TrialSetup& setup, Provider& agent_provider,
                     Provider& receiver_provider) {
    Transcript t;
    t.strategy = setup.strategy;
    t.agent_model = setup.agent_model;
    t.receiver_model = setup.receiver_model;
    t.trial_id = make_trial_id(setup.scenario.id, setup.strategy, setup.agent_model,
                               setup.receiver_model);

    if (setup.strategy == StrategyCondition::pseudonymize) {
        try {
            t.pseudo_plan = plan_pseudonyms(setup.scenario, agent_provider, setup.agent_model,
                                            setup.planner_temperature);
        } catch (const std::exception& e) {
            throw ProtocolError(std::string("stage=planning: ") + e.what());
        }
    }

    t.turns.push_back({Speaker::receiver, 0, setup.scenario.incoming_message, std::nullopt});

    int agent_turn = 0;
    auto agent_step = [&](const char* stage) {
        ++agent_turn;
        ChatRequest req = agent_request(setup, t.pseudo_plan, t.turns);
        ProviderResponse resp;
        try {
            resp = agent_provider.complete(req);
        } catch (const std::exception& e) {
            throw ProtocolError(std::string("stage=") + stage + ", turn " +
                                std::to_string(t.turns.size()) + ": " + e.what());
        }
        std::string text = sanitize_reply(resp.text);
        if (text.empty())
            throw ProtocolError("empty agent turn " + std::to_string(agent_turn));
        t.turns.push_back({Speaker::agent, int(t.turns.size()), std::move(text),
                           canonical_messages_digest(req.messages)});
    };
    auto receiver_step = [&]() {
        ChatRequest req = receiver_request(setup, t.turns);
        ProviderResponse resp;
        try {
            resp = receiver_provider.complete(req);
        } catch (const std::exception& e) {
            throw ProtocolError(std::string("stage=stage2_receiver, turn ") +
                                std::to_string(t.turns.size()) + ": " + e.what());
        }
        std::string text = trim(resp.text);
        if (text.empty())
            throw ProtocolError("empty receiver turn at index " + std::to_string(t.turns.size()));
        t.turns.push_back({Speaker::receiver, int(t.turns.size()), std::move(text),
                           canonical_messages_digest(req.messages)});
    };

    agent_step("stage1");
    for (int round = 0; round < setup.follow_up_rounds; ++round) {
        receiver_step();
        agent_step("stage2_agent");
    }

    validate_transcript(t, setup.follow_up_rounds);
    return t;
}

}  // namespace infosuff
