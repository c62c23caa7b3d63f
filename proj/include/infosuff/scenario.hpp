#pragma once

#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace infosuff {

struct CorpusError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Sensitivity { high, medium, low };
enum class PowerRelation { institutional, peer, intimate };
enum class SensitivityType { discrimination_risk, social_cost, boundary };
enum class MessageKind { direct, implicit };

std::string to_string(Sensitivity v);
std::string to_string(PowerRelation v);
std::string to_string(SensitivityType v);
std::string to_string(MessageKind v);
Sensitivity sensitivity_from_string(const std::string& s);
PowerRelation power_relation_from_string(const std::string& s);
SensitivityType sensitivity_type_from_string(const std::string& s);
MessageKind message_kind_from_string(const std::string& s);

constexpr int kPowerRelationCount = 3;
constexpr int kSensitivityTypeCount = 3;

// One private fact the user holds: the exact value, its category one
// abstraction level up, and the broad domain it belongs to.
struct PrivateAttribute {
    std::string key;
    std::string value;
    std::string category;
    std::string domain;
    Sensitivity sensitivity = Sensitivity::high;
};

struct Scenario {
    std::string id;
    std::string seed_id;
    PowerRelation power_relation = PowerRelation::peer;
    SensitivityType sensitivity_type = SensitivityType::boundary;
    std::string user_context;
    std::string user_goal;
    std::string user_role;
    std::string receiver_role;
    std::string receiver_functional_needs;
    std::string incoming_message;
    MessageKind message_kind = MessageKind::direct;
    std::vector<PrivateAttribute> attributes;
    // Strategy names this scenario is declared incompatible with. Optional
    // input; the harness never infers compatibility itself.
    std::vector<std::string> incompatible_conditions;

    std::vector<PrivateAttribute> high_sensitivity_attributes() const;
};

struct ScenarioSet {
    std::vector<Scenario> scenarios;  // sorted by id, ids unique
    std::string provenance;           // digest of the source bytes
};

struct Violation {
    std::string path;     // e.g. "attributes[0].value"
    std::string message;  // what is wrong
};
using ValidationReport = std::vector<Violation>;

// Never throws; a valid scenario yields an empty report.
ValidationReport validate_scenario(const Scenario& s);

// JSON-lines, one scenario per line. Throws CorpusError naming the line
// on parse failures, and bundling the ValidationReport on invalid scenarios.
ScenarioSet load_corpus(std::istream& in);
ScenarioSet load_corpus_file(const std::string& path);
std::string serialize_scenario(const Scenario& s);
std::string serialize_corpus(const ScenarioSet& set);

}  // namespace infosuff
