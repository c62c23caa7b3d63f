#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "infosuff/provider.hpp"
#include "infosuff/scenario.hpp"

namespace infosuff {

struct JudgeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Confidence { high, medium, low };
std::string to_string(Confidence c);
Confidence confidence_from_string(const std::string& s);

struct AdversaryGuess {
    std::string key;
    std::optional<std::string> inferred_value;
    std::optional<std::string> inferred_category;
    Confidence confidence = Confidence::low;
    bool cannot_determine = false;
    std::string reasoning;
};

// Ordered by specificity: EXACT > CATEGORY > DOMAIN > NONE.
enum class RecoveryClass { none = 0, domain = 1, category = 2, exact = 3 };
std::string to_string(RecoveryClass c);
RecoveryClass recovery_from_string(const std::string& s);

struct UtilityJudgment {
    int goal_achieved = 0;      // 1..5
    int receiver_satisfied = 0; // 1..5
    std::string reason;
};

struct CovertnessJudgment {
    int covertness_detection = 0;  // 1..5
    std::string signals;
};

struct NaturalnessJudgment {
    int flow_naturalness = 0;   // 1..5
    int user_plausibility = 0;  // 1..5
    std::string reason;
};

enum class StrategyGuess { disclose, suppress, generalize, pseudo };
std::string to_string(StrategyGuess g);
StrategyGuess strategy_guess_from_string(const std::string& s);

struct StrategyLabel {
    StrategyGuess strategy = StrategyGuess::disclose;
    Confidence confidence = Confidence::low;
    std::string signals;
};

// Outgoing-request builders (temperature 0 throughout; judges must be
// reproducible).
ChatRequest adversary_request(const std::string& view,
                              const std::vector<PrivateAttribute>& attrs,
                              const std::string& model, const std::string& tag = "adversary",
                              double temperature = 0.0);
ChatRequest recovery_request(const std::string& guess, const PrivateAttribute& truth,
                             const std::string& model, double temperature = 0.0);
ChatRequest utility_request(const Scenario& scenario, const std::string& conversation,
                            const std::string& model, double temperature = 0.0);
ChatRequest covertness_request(const std::string& conversation, const std::string& model,
                               double temperature = 0.0);
ChatRequest naturalness_request(const std::string& conversation, const std::string& model,
                                double temperature = 0.0);
ChatRequest strategy_request(const std::string& reply, const std::string& model,
                             double temperature = 0.0);

// One guess per attribute, aligned with attrs order. The attrs_list sent
// to the adversary carries keys and domains only.
std::vector<AdversaryGuess> infer_attributes(const std::string& view,
                                             const std::vector<PrivateAttribute>& attrs,
                                             Provider& provider, const std::string& model,
                                             const std::string& tag = "adversary",
                                             double temperature = 0.0);

// Abstentions classify as NONE without a provider call.
RecoveryClass classify_recovery(const AdversaryGuess& guess, const PrivateAttribute& truth,
                                Provider& provider, const std::string& model,
                                double temperature = 0.0);

// Deterministic offline fallback: normalized-substring matching at each
// level of the EXACT/CATEGORY/DOMAIN/NONE hierarchy.
RecoveryClass classify_recovery_exactmatch(const AdversaryGuess& guess,
                                           const PrivateAttribute& truth);

UtilityJudgment judge_utility(const std::string& conversation, const Scenario& scenario,
                              Provider& provider, const std::string& model,
                              double temperature = 0.0);
CovertnessJudgment judge_covertness(const std::string& conversation, Provider& provider,
                                    const std::string& model, double temperature = 0.0);
NaturalnessJudgment judge_naturalness(const std::string& conversation, Provider& provider,
                                      const std::string& model, double temperature = 0.0);
StrategyLabel classify_strategy(const std::string& reply, Provider& provider,
                                const std::string& model, double temperature = 0.0);

}  // namespace infosuff
