#include "infosuff/config.hpp"

#include <fstream>
#include <sstream>

#include "infosuff/sha256.hpp"
#include "infosuff/util.hpp"

namespace infosuff {

namespace {

std::vector<std::string> parse_list(const std::string& value) {
    std::vector<std::string> out;
    for (const auto& part : split(value, ',')) {
        std::string t = trim(part);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

int parse_int(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad integer for " + key + ": \"" + value + "\"");
    }
}

double parse_real(const std::string& value, const std::string& key) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad number for " + key + ": \"" + value + "\"");
    }
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
    std::ostringstream raw;
    raw << in.rdbuf();
    const std::string source = raw.str();

    RunConfig cfg;
    cfg.config_digest = sha256_hex(source);
    cfg.strategies = all_strategies();

    std::istringstream lines(source);
    std::string line;
    std::string section;  // empty = top level, otherwise endpoint model name
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            std::string header = trim(t.substr(1, t.size() - 2));
            if (header.rfind("endpoint ", 0) != 0)
                throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" +
                                  header + "]");
            section = trim(header.substr(9));
            if (section.empty())
                throw ConfigError("line " + std::to_string(line_no) + ": endpoint needs a name");
            cfg.endpoints[section];  // create
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));

        if (!section.empty()) {
            if (key == "base_url")
                cfg.endpoints[section].base_url = value;
            else if (key == "key_env")
                cfg.endpoints[section].key_env = value;
            else
                throw ConfigError("line " + std::to_string(line_no) + ": unknown endpoint key " +
                                  key);
            continue;
        }

        if (key == "corpus") cfg.corpus_path = value;
        else if (key == "store") cfg.store_path = value;
        else if (key == "cache_dir") cfg.cache_dir = value;
        else if (key == "script") cfg.script_path = value;
        else if (key == "provider") {
            if (value == "http") cfg.provider = ProviderKind::http;
            else if (value == "scripted") cfg.provider = ProviderKind::scripted;
            else throw ConfigError("provider must be http or scripted, got \"" + value + "\"");
        }
        else if (key == "agent_models") cfg.agent_models = parse_list(value);
        else if (key == "receiver_model") cfg.receiver_model = value;
        else if (key == "judge_model") cfg.judge_model = value;
        else if (key == "strategies") {
            cfg.strategies.clear();
            for (const auto& s : parse_list(value))
                cfg.strategies.push_back(strategy_from_string(s));
        }
        else if (key == "follow_up_rounds") cfg.follow_up_rounds = parse_int(value, key);
        else if (key == "concurrency") cfg.concurrency = parse_int(value, key);
        else if (key == "agent_temperature") cfg.agent_temperature = parse_real(value, key);
        else if (key == "receiver_temperature") cfg.receiver_temperature = parse_real(value, key);
        else if (key == "judge_temperature") cfg.judge_temperature = parse_real(value, key);
        else if (key == "planner_temperature") cfg.planner_temperature = parse_real(value, key);
        else if (key == "max_tokens") cfg.max_tokens = parse_int(value, key);
        else if (key == "seed") cfg.seed = std::uint64_t(std::stoull(value));
        else if (key == "retry_max_attempts") cfg.retry.max_attempts = parse_int(value, key);
        else if (key == "retry_backoff_base_ms")
            cfg.retry.backoff_base_ms = parse_int(value, key);
        else if (key == "retry_backoff_factor") cfg.retry.backoff_factor = parse_real(value, key);
        else throw ConfigError("line " + std::to_string(line_no) + ": unknown key " + key);
    }

    if (cfg.corpus_path.empty()) throw ConfigError("corpus is required");
    if (cfg.store_path.empty()) throw ConfigError("store is required");
    if (cfg.agent_models.empty()) throw ConfigError("agent_models is required");
    if (cfg.receiver_model.empty()) throw ConfigError("receiver_model is required");
    if (cfg.judge_model.empty()) throw ConfigError("judge_model is required");
    if (cfg.strategies.empty()) throw ConfigError("strategies must be nonempty");
    if (cfg.follow_up_rounds < 0) throw ConfigError("follow_up_rounds must be >= 0");
    if (cfg.concurrency < 1) throw ConfigError("concurrency must be >= 1");

    if (cfg.provider == ProviderKind::scripted) {
        if (cfg.script_path.empty())
            throw ConfigError("provider = scripted requires script = <file>");
    } else {
        auto need_endpoint = [&](const std::string& model) {
            auto it = cfg.endpoints.find(model);
            if (it == cfg.endpoints.end() || it->second.base_url.empty())
                throw ConfigError("no endpoint configured for model \"" + model + "\"");
        };
        for (const auto& m : cfg.agent_models) need_endpoint(m);
        need_endpoint(cfg.receiver_model);
        need_endpoint(cfg.judge_model);
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file: " + path);
    return parse_run_config(f);
}

}  // namespace infosuff
