#pragma once

#include <string>
#include <vector>

#include "infosuff/protocol.hpp"
#include "infosuff/scenario.hpp"

// Prompt templates and their placeholder substitution. The template text
// lives in prompts/*.txt and is embedded verbatim at build time.
namespace infosuff::prompts {

const std::string& strategy_system(StrategyCondition s);
const std::string& pressure_instruction(PowerRelation r);
std::string receiver_system(const Scenario& s);

const std::string& planner_system();
std::string planner_user(const Scenario& s);

const std::string& adversary_system();
// Keys and domain labels only; true values and categories never appear.
std::string adversary_attrs_list(const std::vector<PrivateAttribute>& attrs);
std::string adversary_user(const std::string& view,
                           const std::vector<PrivateAttribute>& attrs);

const std::string& utility_system();
std::string utility_user(const Scenario& s, const std::string& conversation);

const std::string& covertness_system();
std::string covertness_user(const std::string& conversation);

const std::string& naturalness_system();
std::string naturalness_user(const std::string& conversation);

const std::string& strategy_classifier_system();
std::string strategy_classifier_user(const std::string& reply);

const std::string& recovery_system();
std::string recovery_user(const std::string& guess, const PrivateAttribute& truth);

// Raw template lookup by golden-file stem (e.g. "strategy_suppress"),
// for the byte-exactness check against prompts/*.txt.
const std::string& raw_template(const std::string& name);
std::vector<std::string> template_names();

}  // namespace infosuff::prompts
