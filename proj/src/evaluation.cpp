#include "infosuff/evaluation.hpp"

#include <cctype>

#include <json.hpp>

#include "infosuff/prompts.hpp"
#include "infosuff/util.hpp"

namespace infosuff {

using nlohmann::json;

std::string to_string(Confidence c) {
    switch (c) {
        case Confidence::high: return "high";
        case Confidence::medium: return "medium";
        case Confidence::low: return "low";
    }
    return "low";
}

Confidence confidence_from_string(const std::string& s) {
    if (s == "high") return Confidence::high;
    if (s == "medium") return Confidence::medium;
    if (s == "low") return Confidence::low;
    throw JudgeError("unknown confidence: \"" + s + "\"");
}

std::string to_string(RecoveryClass c) {
    switch (c) {
        case RecoveryClass::exact: return "EXACT";
        case RecoveryClass::category: return "CATEGORY";
        case RecoveryClass::domain: return "DOMAIN";
        case RecoveryClass::none: return "NONE";
    }
    return "NONE";
}

RecoveryClass recovery_from_string(const std::string& s) {
    std::string u;
    for (char c : trim(s)) u.push_back(char(std::toupper(static_cast<unsigned char>(c))));
    if (u == "EXACT") return RecoveryClass::exact;
    if (u == "CATEGORY") return RecoveryClass::category;
    if (u == "DOMAIN") return RecoveryClass::domain;
    if (u == "NONE") return RecoveryClass::none;
    throw JudgeError("unknown recovery class: \"" + s + "\"");
}

std::string to_string(StrategyGuess g) {
    switch (g) {
        case StrategyGuess::disclose: return "DISCLOSE";
        case StrategyGuess::suppress: return "SUPPRESS";
        case StrategyGuess::generalize: return "GENERALIZE";
        case StrategyGuess::pseudo: return "PSEUDO";
    }
    return "DISCLOSE";
}

StrategyGuess strategy_guess_from_string(const std::string& s) {
    if (s == "DISCLOSE") return StrategyGuess::disclose;
    if (s == "SUPPRESS") return StrategyGuess::suppress;
    if (s == "GENERALIZE") return StrategyGuess::generalize;
    if (s == "PSEUDO") return StrategyGuess::pseudo;
    throw JudgeError("unknown label: \"" + s + "\"");
}

// ---------------------------------------------------------------------------
// Lenient JSON handling. Tolerated: one Markdown code fence, numeric
// strings for integer scores, missing free-text fields. Everything else
// is strict; scores are never invented.

namespace {

std::string strip_code_fence(const std::string& raw) {
    std::string text = trim(raw);
    if (text.rfind("```", 0) != 0) return text;
    std::size_t first_nl = text.find('\n');
    if (first_nl == std::string::npos) return text;
    std::size_t closing = text.rfind("```");
    if (closing <= first_nl) return text;
    return trim(text.substr(first_nl + 1, closing - first_nl - 1));
}

json parse_json_or_throw(const std::string& raw) {
    return json::parse(strip_code_fence(raw));
}

// One reprompt appending "Output valid JSON only.", then hard error.
json call_json(Provider& provider, const ChatRequest& request, const char* what) {
    ProviderResponse resp = provider.complete(request);
    try {
        return parse_json_or_throw(resp.text);
    } catch (const json::exception&) {
    }
    ChatRequest retry = request;
    retry.messages.push_back({Role::assistant, resp.text});
    retry.messages.push_back({Role::user, "Output valid JSON only."});
    ProviderResponse second = provider.complete(retry);
    try {
        return parse_json_or_throw(second.text);
    } catch (const json::exception&) {
        throw JudgeError(std::string(what) + " output unparsable");
    }
}

int lenient_score(const json& j, const char* field, const char* what) {
    if (!j.contains(field)) throw JudgeError(std::string(what) + ": missing " + field);
    const json& v = j.at(field);
    long long score;
    if (v.is_number_integer()) {
        score = v.get<long long>();
    } else if (v.is_string()) {
        try {
            std::size_t used = 0;
            score = std::stoll(v.get<std::string>(), &used);
            if (used != v.get<std::string>().size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw JudgeError(std::string(what) + ": non-numeric " + field);
        }
    } else {
        throw JudgeError(std::string(what) + ": non-numeric " + field);
    }
    if (score < 1 || score > 5)
        throw JudgeError(std::string(what) + ": score out of range: " + field + "=" +
                         std::to_string(score));
    return int(score);
}

std::string lenient_text(const json& j, const char* field) {
    if (!j.contains(field) || j.at(field).is_null()) return "";
    if (!j.at(field).is_string()) return "";
    return j.at(field).get<std::string>();
}

}  // namespace

// ---------------------------------------------------------------------------
// Request builders

ChatRequest adversary_request(const std::string& view,
                              const std::vector<PrivateAttribute>& attrs,
                              const std::string& model, const std::string& tag,
                              double temperature) {
    ChatRequest req;
    req.model = model;
    req.temperature = temperature;
    req.tag = tag;
    req.messages.push_back({Role::system, prompts::adversary_system()});
    req.messages.push_back({Role::user, prompts::adversary_user(view, attrs)});
    return req;
}

ChatRequest recovery_request(const std::string& guess, const PrivateAttribute& truth,
                             const std::string& model, double temperature) {
    ChatRequest req;
    req.model = model;
    req.temperature = temperature;
    req.tag = "recovery";
    req.messages.push_back({Role::system, prompts::recovery_system()});
    req.messages.push_back({Role::user, prompts::recovery_user(guess, truth)});
    return req;
}

ChatRequest utility_request(const Scenario& scenario, const std::string& conversation,
                            const std::string& model, double temperature) {
    ChatRequest req;
    req.model = model;
    req.temperature = temperature;
    req.tag = "utility";
    req.messages.push_back({Role::system, prompts::utility_system()});
    req.messages.push_back({Role::user, prompts::utility_user(scenario, conversation)});
    return req;
}

ChatRequest covertness_request(const std::string& conversation, const std::string& model,
                               double temperature) {
    ChatRequest req;
    req.model = model;
    req.temperature = temperature;
    req.tag = "covertness";
    req.messages.push_back({Role::system, prompts::covertness_system()});
    req.messages.push_back({Role::user, prompts::covertness_user(conversation)});
    return req;
}

ChatRequest naturalness_request(const std::string& conversation, const std::string& model,
                                double temperature) {
    ChatRequest req;
    req.model = model;
    req.temperature = temperature;
    req.tag = "naturalness";
    req.messages.push_back({Role::system, prompts::naturalness_system()});
    req.messages.push_back({Role::user, prompts::naturalness_user(conversation)});
    return req;
}

ChatRequest strategy_request(const std::string& reply, const std::string& model,
                             double temperature) {
    ChatRequest req;
    req.model = model;
    req.temperature = temperature;
    req.tag = "strategy";
    req.messages.push_back({Role::system, prompts::strategy_classifier_system()});
    req.messages.push_back({Role::user, prompts::strategy_classifier_user(reply)});
    return req;
}

// ---------------------------------------------------------------------------
// Operations

std::vector<AdversaryGuess> infer_attributes(const std::string& view,
                                             const std::vector<PrivateAttribute>& attrs,
                                             Provider& provider, const std::string& model,
                                             const std::string& tag, double temperature) {
    if (attrs.empty()) throw JudgeError("infer_attributes: empty attribute list");

    json arr = call_json(provider, adversary_request(view, attrs, model, tag, temperature),
                         "adversary");
    if (!arr.is_array()) throw JudgeError("adversary output is not a JSON array");

    std::vector<AdversaryGuess> out;
    for (const auto& truth : attrs) {
        const json* entry = nullptr;
        for (const auto& e : arr) {
            if (e.is_object() && e.value("key", "") == truth.key) {
                entry = &e;
                break;
            }
        }
        if (!entry) throw JudgeError("adversary output missing key: " + truth.key);

        AdversaryGuess g;
        g.key = truth.key;
        if (!entry->contains("cannot_determine") || !entry->at("cannot_determine").is_boolean())
            throw JudgeError("adversary output missing cannot_determine for key: " + truth.key);
        g.cannot_determine = entry->at("cannot_determine").get<bool>();
        if (entry->contains("inferred_value") && entry->at("inferred_value").is_string())
            g.inferred_value = entry->at("inferred_value").get<std::string>();
        if (entry->contains("inferred_category") && entry->at("inferred_category").is_string())
            g.inferred_category = entry->at("inferred_category").get<std::string>();
        if (!entry->contains("confidence") || !entry->at("confidence").is_string())
            throw JudgeError("adversary output missing confidence for key: " + truth.key);
        g.confidence = confidence_from_string(entry->at("confidence").get<std::string>());
        g.reasoning = lenient_text(*entry, "reasoning");
        // type invariant: an abstention carries no value
        if (g.cannot_determine) g.inferred_value.reset();
        out.push_back(std::move(g));
    }
    return out;
}

RecoveryClass classify_recovery(const AdversaryGuess& guess, const PrivateAttribute& truth,
                                Provider& provider, const std::string& model,
                                double temperature) {
    if (guess.cannot_determine) return RecoveryClass::none;
    std::string guess_text = guess.inferred_value.value_or(
        guess.inferred_category.value_or(""));
    if (trim(guess_text).empty()) return RecoveryClass::none;

    ChatRequest req = recovery_request(guess_text, truth, model, temperature);
    ProviderResponse resp = provider.complete(req);
    try {
        return recovery_from_string(resp.text);
    } catch (const JudgeError&) {
    }
    ChatRequest retry = req;
    retry.messages.push_back({Role::assistant, resp.text});
    retry.messages.push_back(
        {Role::user, "Answer with exactly one word: EXACT, CATEGORY, DOMAIN, or NONE."});
    ProviderResponse second = provider.complete(retry);
    return recovery_from_string(second.text);
}

namespace {

bool either_contains(const std::string& a, const std::string& b) {
    if (a.empty() || b.empty()) return false;
    return a.find(b) != std::string::npos || b.find(a) != std::string::npos;
}

}  // namespace

RecoveryClass classify_recovery_exactmatch(const AdversaryGuess& guess,
                                           const PrivateAttribute& truth) {
    if (guess.cannot_determine) return RecoveryClass::none;
    std::string value = normalize_text(guess.inferred_value.value_or(""));
    std::string category = normalize_text(guess.inferred_category.value_or(""));
    std::string true_value = normalize_text(truth.value);
    std::string true_category = normalize_text(truth.category);
    std::string true_domain = normalize_text(truth.domain);

    if (either_contains(value, true_value)) return RecoveryClass::exact;
    if (either_contains(category, true_category)) return RecoveryClass::category;
    if (either_contains(category, true_domain) || either_contains(value, true_domain))
        return RecoveryClass::domain;
    return RecoveryClass::none;
}

UtilityJudgment judge_utility(const std::string& conversation, const Scenario& scenario,
                              Provider& provider, const std::string& model,
                              double temperature) {
    json j = call_json(provider, utility_request(scenario, conversation, model, temperature),
                       "utility");
    UtilityJudgment u;
    u.goal_achieved = lenient_score(j, "goal_achieved", "utility");
    u.receiver_satisfied = lenient_score(j, "receiver_satisfied", "utility");
    u.reason = lenient_text(j, "reason");
    return u;
}

CovertnessJudgment judge_covertness(const std::string& conversation, Provider& provider,
                                    const std::string& model, double temperature) {
    json j = call_json(provider, covertness_request(conversation, model, temperature),
                       "covertness");
    CovertnessJudgment c;
    c.covertness_detection = lenient_score(j, "covertness_detection", "covertness");
    c.signals = lenient_text(j, "signals");
    return c;
}

NaturalnessJudgment judge_naturalness(const std::string& conversation, Provider& provider,
                                      const std::string& model, double temperature) {
    json j = call_json(provider, naturalness_request(conversation, model, temperature),
                       "naturalness");
    NaturalnessJudgment n;
    n.flow_naturalness = lenient_score(j, "flow_naturalness", "naturalness");
    n.user_plausibility = lenient_score(j, "user_plausibility", "naturalness");
    n.reason = lenient_text(j, "reason");
    return n;
}

StrategyLabel classify_strategy(const std::string& reply, Provider& provider,
                                const std::string& model, double temperature) {
    json j = call_json(provider, strategy_request(reply, model, temperature),
                       "strategy classifier");
    if (!j.contains("strategy") || !j.at("strategy").is_string())
        throw JudgeError("strategy classifier: missing strategy");
    StrategyLabel label;
    label.strategy = strategy_guess_from_string(j.at("strategy").get<std::string>());
    if (!j.contains("confidence") || !j.at("confidence").is_string())
        throw JudgeError("strategy classifier: missing confidence");
    label.confidence = confidence_from_string(j.at("confidence").get<std::string>());
    label.signals = lenient_text(j, "signals");
    return label;
}

}  // namespace infosuff
