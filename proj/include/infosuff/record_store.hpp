#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "infosuff/evaluation.hpp"
#include "infosuff/protocol.hpp"
#include "infosuff/scenario.hpp"

namespace infosuff {

struct StoreError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class TrialStatus { complete, failed };

struct CallTokens {
    std::string tag;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

// Everything one trial produced: the transcript, all judge outputs, and
// enough provenance to recompute metrics without any model call.
struct TrialRecord {
    std::string trial_id;
    std::string protocol_version;
    Scenario scenario_snapshot;
    Transcript transcript;
    std::string judge_model;
    std::vector<AdversaryGuess> guesses_static;
    std::vector<AdversaryGuess> guesses_probed;
    std::vector<RecoveryClass> classes_static;  // aligned with high-sensitivity attributes
    std::vector<RecoveryClass> classes_probed;
    UtilityJudgment utility;
    CovertnessJudgment covertness;
    NaturalnessJudgment naturalness;
    StrategyLabel strategy_label;
    std::vector<CallTokens> token_counts;
    std::int64_t started_at_ms = 0;
    std::int64_t finished_at_ms = 0;
    TrialStatus status = TrialStatus::complete;
    std::string failure_stage;    // set when status == failed
    std::string failure_message;  // set when status == failed

    std::string agent_model() const { return transcript.agent_model; }
    std::string strategy_name() const { return to_string(transcript.strategy); }
};

std::string serialize_record(const TrialRecord& r);
TrialRecord parse_record(const std::string& line);

struct ScanFilter {
    std::optional<std::string> model;
    std::optional<std::string> strategy;
    std::optional<TrialStatus> status;
};

// Append-only JSON-lines store, one record per line, id index rebuilt on
// open. Appends stage the line in a journal file first (write + rename),
// so an interrupted put is either invisible or recovered on next open.
// Single writer per instance; scans serve from the in-memory index.
class RecordStore {
 public:
    explicit RecordStore(const std::string& dir);

    // A complete record is written at most once: an identical re-put is a
    // no-op, a conflicting one is an error. A failed record may be
    // superseded by a later attempt.
    void put(const TrialRecord& record);

    std::vector<TrialRecord> scan(const ScanFilter& filter = {}) const;
    bool has_complete(const std::string& trial_id) const;
    std::size_t size() const { return index_.size(); }

    const std::string& dir() const { return dir_; }

    void write_meta(const std::string& key, const std::string& value);
    std::optional<std::string> read_meta(const std::string& key) const;

 private:
    void load();
    void append_line(const std::string& line);

    std::string dir_;
    std::string records_path_;
    std::map<std::string, TrialRecord> index_;  // trial_id -> latest record
};

struct TrialSpec {
    std::string scenario_id;
    StrategyCondition strategy = StrategyCondition::no_protection;
    std::string agent_model;
    std::string receiver_model;
    std::string trial_id;
};

// Cross product scenarios x strategies x agent models, minus trials
// already complete in the store, minus declared incompatible conditions.
std::vector<TrialSpec> pending_trials(const ScenarioSet& corpus,
                                      const std::vector<StrategyCondition>& strategies,
                                      const std::vector<std::string>& agent_models,
                                      const std::string& receiver_model,
                                      const RecordStore& store);

}  // namespace infosuff
