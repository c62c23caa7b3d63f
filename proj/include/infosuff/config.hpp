#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "infosuff/protocol.hpp"

namespace infosuff {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EndpointSpec {
    std::string base_url;
    std::string key_env;  // env var holding the API key
};

enum class ProviderKind { http, scripted };

// Plain-text key-value config with [endpoint <model>] sections. The file
// digest rides along into store metadata and every report.
struct RunConfig {
    std::string corpus_path;
    std::string store_path;
    std::string cache_dir;    // empty: no response cache
    std::string script_path;  // required when provider = scripted
    ProviderKind provider = ProviderKind::http;

    std::vector<std::string> agent_models;
    std::string receiver_model;
    std::string judge_model;
    std::vector<StrategyCondition> strategies;

    int follow_up_rounds = 2;
    int concurrency = 1;
    double agent_temperature = 0.7;
    double receiver_temperature = 0.7;
    double judge_temperature = 0.0;
    double planner_temperature = 0.0;
    std::optional<int> max_tokens;
    std::uint64_t seed = 0;

    std::map<std::string, EndpointSpec> endpoints;  // model -> endpoint
    std::string config_digest;                      // sha256 of the file bytes

    RetryPolicy retry;
};

RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::string& path);

}  // namespace infosuff
