#include "infosuff/prompts.hpp"

#include <map>
#include <stdexcept>

#include "infosuff/prompt_text.hpp"

namespace infosuff::prompts {

namespace {

std::string replace_all(std::string text, const std::string& placeholder,
                        const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
    return text;
}

const std::map<std::string, const char*>& table() {
    static const std::map<std::string, const char*> t = {
        {"strategy_no_protection", prompt_text::k_strategy_no_protection},
        {"strategy_suppress", prompt_text::k_strategy_suppress},
        {"strategy_generalize", prompt_text::k_strategy_generalize},
        {"strategy_pseudonymize", prompt_text::k_strategy_pseudonymize},
        {"receiver_system", prompt_text::k_receiver_system},
        {"pressure_institutional", prompt_text::k_pressure_institutional},
        {"pressure_peer", prompt_text::k_pressure_peer},
        {"pressure_intimate", prompt_text::k_pressure_intimate},
        {"planner_system", prompt_text::k_planner_system},
        {"adversary_system", prompt_text::k_adversary_system},
        {"adversary_user", prompt_text::k_adversary_user},
        {"utility_system", prompt_text::k_utility_system},
        {"utility_user", prompt_text::k_utility_user},
        {"covertness_system", prompt_text::k_covertness_system},
        {"covertness_user", prompt_text::k_covertness_user},
        {"naturalness_system", prompt_text::k_naturalness_system},
        {"naturalness_user", prompt_text::k_naturalness_user},
        {"strategy_classifier_system", prompt_text::k_strategy_classifier_system},
        {"strategy_classifier_user", prompt_text::k_strategy_classifier_user},
        {"recovery_system", prompt_text::k_recovery_system},
        {"recovery_user", prompt_text::k_recovery_user},
    };
    return t;
}

const std::string& cached(const std::string& name) {
    static std::map<std::string, std::string> cache;
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    auto t = table().find(name);
    if (t == table().end()) throw std::invalid_argument("unknown prompt template: " + name);
    return cache.emplace(name, t->second).first->second;
}

}  // namespace

const std::string& raw_template(const std::string& name) { return cached(name); }

std::vector<std::string> template_names() {
    std::vector<std::string> names;
    for (const auto& [name, text] : table()) names.push_back(name);
    return names;
}

const std::string& strategy_system(StrategyCondition s) {
    switch (s) {
        case StrategyCondition::no_protection: return cached("strategy_no_protection");
        case StrategyCondition::suppress: return cached("strategy_suppress");
        case StrategyCondition::generalize: return cached("strategy_generalize");
        case StrategyCondition::pseudonymize: return cached("strategy_pseudonymize");
    }
    throw std::invalid_argument("bad strategy condition");
}

const std::string& pressure_instruction(PowerRelation r) {
    switch (r) {
        case PowerRelation::institutional: return cached("pressure_institutional");
        case PowerRelation::peer: return cached("pressure_peer");
        case PowerRelation::intimate: return cached("pressure_intimate");
    }
    throw std::invalid_argument("bad power relation");
}

std::string receiver_system(const Scenario& s) {
    std::string text = cached("receiver_system");
    text = replace_all(text, "{receiver_role}", s.receiver_role);
    text = replace_all(text, "{user_role}", s.user_role);
    text = replace_all(text, "{receiver_functional_needs}", s.receiver_functional_needs);
    text = replace_all(text, "{pressure_instruction}", pressure_instruction(s.power_relation));
    return text;
}

const std::string& planner_system() { return cached("planner_system"); }

std::string planner_user(const Scenario& s) {
    std::string out = "Scenario description:\n" + s.user_context +
                      "\n\nPrivate attributes (REAL values):\n";
    for (const auto& a : s.high_sensitivity_attributes()) {
        out += "- key: " + a.key + "\n  value: " + a.value + "\n  category: " + a.category +
               "\n  domain: " + a.domain + "\n";
    }
    return out;
}

const std::string& adversary_system() { return cached("adversary_system"); }

std::string adversary_attrs_list(const std::vector<PrivateAttribute>& attrs) {
    std::string out;
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        if (i) out += "\n";
        out += "- " + attrs[i].key + " (domain: " + attrs[i].domain + ")";
    }
    return out;
}

std::string adversary_user(const std::string& view,
                           const std::vector<PrivateAttribute>& attrs) {
    std::string text = cached("adversary_user");
    text = replace_all(text, "{text}", view);
    text = replace_all(text, "{attrs_list}", adversary_attrs_list(attrs));
    return text;
}

const std::string& utility_system() { return cached("utility_system"); }

std::string utility_user(const Scenario& s, const std::string& conversation) {
    std::string text = cached("utility_user");
    text = replace_all(text, "{user_goal}", s.user_goal);
    text = replace_all(text, "{receiver_functional_needs}", s.receiver_functional_needs);
    text = replace_all(text, "{conversation_text}", conversation);
    return text;
}

const std::string& covertness_system() { return cached("covertness_system"); }

std::string covertness_user(const std::string& conversation) {
    return replace_all(cached("covertness_user"), "{conversation_text}", conversation);
}

const std::string& naturalness_system() { return cached("naturalness_system"); }

std::string naturalness_user(const std::string& conversation) {
    return replace_all(cached("naturalness_user"), "{conversation_text}", conversation);
}

const std::string& strategy_classifier_system() { return cached("strategy_classifier_system"); }

std::string strategy_classifier_user(const std::string& reply) {
    return replace_all(cached("strategy_classifier_user"), "{reply_text}", reply);
}

const std::string& recovery_system() { return cached("recovery_system"); }

std::string recovery_user(const std::string& guess, const PrivateAttribute& truth) {
    std::string text = cached("recovery_user");
    text = replace_all(text, "{true_value}", truth.value);
    text = replace_all(text, "{true_category}", truth.category);
    text = replace_all(text, "{domain}", truth.domain);
    text = replace_all(text, "{guess}", guess);
    return text;
}

}  // namespace infosuff::prompts
