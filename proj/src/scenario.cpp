#include "infosuff/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "infosuff/sha256.hpp"
#include "infosuff/util.hpp"

namespace infosuff {

using nlohmann::json;

std::string to_string(Sensitivity v) {
    switch (v) {
        case Sensitivity::high: return "high";
        case Sensitivity::medium: return "medium";
        case Sensitivity::low: return "low";
    }
    return "high";
}

std::string to_string(PowerRelation v) {
    switch (v) {
        case PowerRelation::institutional: return "institutional";
        case PowerRelation::peer: return "peer";
        case PowerRelation::intimate: return "intimate";
    }
    return "peer";
}

std::string to_string(SensitivityType v) {
    switch (v) {
        case SensitivityType::discrimination_risk: return "discrimination_risk";
        case SensitivityType::social_cost: return "social_cost";
        case SensitivityType::boundary: return "boundary";
    }
    return "boundary";
}

std::string to_string(MessageKind v) {
    return v == MessageKind::direct ? "direct" : "implicit";
}

namespace {

[[noreturn]] void bad_enum(const std::string& what, const std::string& s) {
    throw CorpusError("unknown " + what + " value: \"" + s + "\"");
}

}  // namespace

Sensitivity sensitivity_from_string(const std::string& s) {
    if (s == "high") return Sensitivity::high;
    if (s == "medium") return Sensitivity::medium;
    if (s == "low") return Sensitivity::low;
    bad_enum("sensitivity", s);
}

PowerRelation power_relation_from_string(const std::string& s) {
    if (s == "institutional") return PowerRelation::institutional;
    if (s == "peer") return PowerRelation::peer;
    if (s == "intimate") return PowerRelation::intimate;
    bad_enum("power_relation", s);
}

SensitivityType sensitivity_type_from_string(const std::string& s) {
    if (s == "discrimination_risk") return SensitivityType::discrimination_risk;
    if (s == "social_cost") return SensitivityType::social_cost;
    if (s == "boundary") return SensitivityType::boundary;
    bad_enum("sensitivity_type", s);
}

MessageKind message_kind_from_string(const std::string& s) {
    if (s == "direct") return MessageKind::direct;
    if (s == "implicit") return MessageKind::implicit;
    bad_enum("message_kind", s);
}

std::vector<PrivateAttribute> Scenario::high_sensitivity_attributes() const {
    std::vector<PrivateAttribute> out;
    for (const auto& a : attributes)
        if (a.sensitivity == Sensitivity::high) out.push_back(a);
    return out;
}

ValidationReport validate_scenario(const Scenario& s) {
    ValidationReport report;
    auto add = [&](std::string path, std::string msg) {
        report.push_back({std::move(path), std::move(msg)});
    };

    if (s.id.empty()) add("id", "empty id");
    if (s.incoming_message.empty()) add("incoming_message", "must be nonempty");
    if (s.user_goal.empty()) add("user_goal", "must be nonempty");
    if (s.receiver_functional_needs.empty())
        add("receiver_functional_needs", "must be nonempty");

    std::set<std::string> keys;
    std::size_t high_count = 0;
    for (std::size_t i = 0; i < s.attributes.size(); ++i) {
        const auto& a = s.attributes[i];
        std::string base = "attributes[" + std::to_string(i) + "]";
        if (a.key.empty()) add(base + ".key", "empty key");
        if (!keys.insert(a.key).second)
            add(base + ".key", "duplicate key \"" + a.key + "\"");
        if (a.value.empty()) add(base + ".value", "must be nonempty");
        if (a.category.empty()) add(base + ".category", "must be nonempty");
        if (a.domain.empty()) add(base + ".domain", "must be nonempty");
        if (!a.value.empty()) {
            if (a.value == a.category) add(base, "value/category not distinct");
            if (a.value == a.domain) add(base, "value/domain not distinct");
        }
        if (!a.category.empty() && a.category == a.domain)
            add(base, "category/domain not distinct");
        if (a.sensitivity == Sensitivity::high) ++high_count;
    }
    if (high_count == 0) add("attributes", "no high-sensitivity attribute");

    return report;
}

namespace {

std::string require_string(const json& j, const char* field, int line) {
    if (!j.contains(field) || !j.at(field).is_string())
        throw CorpusError("line " + std::to_string(line) + ": missing or non-string field \"" +
                          field + "\"");
    return j.at(field).get<std::string>();
}

Scenario scenario_from_json(const json& j, int line) {
    Scenario s;
    s.id = require_string(j, "id", line);
    s.seed_id = j.value("seed_id", "");
    s.power_relation = power_relation_from_string(require_string(j, "power_relation", line));
    s.sensitivity_type =
        sensitivity_type_from_string(require_string(j, "sensitivity_type", line));
    s.user_context = require_string(j, "user_context", line);
    s.user_goal = require_string(j, "user_goal", line);
    s.user_role = require_string(j, "user_role", line);
    s.receiver_role = require_string(j, "receiver_role", line);
    s.receiver_functional_needs = require_string(j, "receiver_functional_needs", line);
    s.incoming_message = require_string(j, "incoming_message", line);
    s.message_kind = message_kind_from_string(require_string(j, "message_kind", line));
    if (!j.contains("attributes") || !j.at("attributes").is_array())
        throw CorpusError("line " + std::to_string(line) + ": missing attributes array");
    for (const auto& ja : j.at("attributes")) {
        PrivateAttribute a;
        a.key = require_string(ja, "key", line);
        a.value = require_string(ja, "value", line);
        a.category = require_string(ja, "category", line);
        a.domain = require_string(ja, "domain", line);
        a.sensitivity = sensitivity_from_string(require_string(ja, "sensitivity", line));
        s.attributes.push_back(std::move(a));
    }
    if (j.contains("incompatible_conditions")) {
        for (const auto& c : j.at("incompatible_conditions"))
            s.incompatible_conditions.push_back(c.get<std::string>());
    }
    return s;
}

json scenario_to_json(const Scenario& s) {
    json j;
    j["id"] = s.id;
    j["seed_id"] = s.seed_id;
    j["power_relation"] = to_string(s.power_relation);
    j["sensitivity_type"] = to_string(s.sensitivity_type);
    j["user_context"] = s.user_context;
    j["user_goal"] = s.user_goal;
    j["user_role"] = s.user_role;
    j["receiver_role"] = s.receiver_role;
    j["receiver_functional_needs"] = s.receiver_functional_needs;
    j["incoming_message"] = s.incoming_message;
    j["message_kind"] = to_string(s.message_kind);
    j["attributes"] = json::array();
    for (const auto& a : s.attributes) {
        j["attributes"].push_back({{"key", a.key},
                                   {"value", a.value},
                                   {"category", a.category},
                                   {"domain", a.domain},
                                   {"sensitivity", to_string(a.sensitivity)}});
    }
    if (!s.incompatible_conditions.empty())
        j["incompatible_conditions"] = s.incompatible_conditions;
    return j;
}

}  // namespace

ScenarioSet load_corpus(std::istream& in) {
    std::ostringstream raw;
    raw << in.rdbuf();
    const std::string source = raw.str();

    ScenarioSet set;
    set.provenance = sha256_hex(source);

    std::istringstream lines(source);
    std::string line;
    int line_no = 0;
    std::set<std::string> ids;
    while (std::getline(lines, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw CorpusError("parse failure at line " + std::to_string(line_no) + ": " +
                              e.what());
        }
        Scenario s = scenario_from_json(j, line_no);
        auto report = validate_scenario(s);
        if (!report.empty()) {
            std::string msg =
                "invalid scenario \"" + s.id + "\" at line " + std::to_string(line_no) + ":";
            for (const auto& v : report) msg += "\n  " + v.path + ": " + v.message;
            throw CorpusError(msg);
        }
        if (!ids.insert(s.id).second)
            throw CorpusError("duplicate id \"" + s.id + "\" at line " + std::to_string(line_no));
        set.scenarios.push_back(std::move(s));
    }

    std::sort(set.scenarios.begin(), set.scenarios.end(),
              [](const Scenario& a, const Scenario& b) { return a.id < b.id; });
    return set;
}

ScenarioSet load_corpus_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CorpusError("cannot open corpus file: " + path);
    return load_corpus(f);
}

std::string serialize_scenario(const Scenario& s) {
    return scenario_to_json(s).dump();
}

std::string serialize_corpus(const ScenarioSet& set) {
    std::string out;
    for (const auto& s : set.scenarios) {
        out += serialize_scenario(s);
        out += '\n';
    }
    return out;
}

}  // namespace infosuff
