#include "infosuff/provider.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "infosuff/sha256.hpp"
#include "infosuff/util.hpp"

namespace infosuff {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(const std::string& s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw ProviderError("unknown role: " + s);
}

std::int64_t RetryPolicy::delay_ms(int attempt) const {
    double d = double(backoff_base_ms) * std::pow(backoff_factor, attempt - 1);
    constexpr double kCapMs = 60'000.0;
    return std::int64_t(std::min(d, kCapMs));
}

namespace {

void validate_request(const ChatRequest& request) {
    if (request.messages.empty()) throw ProviderError("request has no messages");
    if (request.messages.front().role == Role::assistant)
        throw ProviderError("first message must be system or user");
}

}  // namespace

std::string canonical_messages_digest(const std::vector<ChatMessage>& messages) {
    Sha256 h;
    const char sep = 0x1f;
    for (const auto& m : messages) {
        std::string role = to_string(m.role);
        h.update(role.data(), role.size());
        h.update(&sep, 1);
        h.update(m.content.data(), m.content.size());
        h.update(&sep, 1);
    }
    auto d = h.digest();
    static const char* hex = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (auto b : d) {
        s.push_back(hex[b >> 4]);
        s.push_back(hex[b & 0xf]);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Script / ScriptedProvider

void Script::add(const std::string& tag, const std::string& digest, std::string text) {
    entries_[{tag, digest}] = std::move(text);
}

void Script::add(const ChatRequest& request, std::string text) {
    add(request.tag, canonical_messages_digest(request.messages), std::move(text));
}

const std::string* Script::find(const std::string& tag, const std::string& digest) const {
    auto it = entries_.find({tag, digest});
    return it == entries_.end() ? nullptr : &it->second;
}

Script Script::from_json_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ProviderError("cannot open script file: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ProviderError("malformed script file " + path + ": " + e.what());
    }
    Script s;
    try {
        for (const auto& e : j.at("entries"))
            s.add(e.at("tag").get<std::string>(), e.at("digest").get<std::string>(),
                  e.at("text").get<std::string>());
    } catch (const json::exception& e) {
        throw ProviderError("malformed script file " + path + ": " + e.what());
    }
    return s;
}

void Script::save_json_file(const std::string& path) const {
    json entries = json::array();
    for (const auto& [key, text] : entries_)
        entries.push_back({{"tag", key.first}, {"digest", key.second}, {"text", text}});
    json j;
    j["entries"] = entries;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ProviderError("cannot write script file: " + path);
    f << j.dump(2) << '\n';
}

namespace {

std::int64_t rough_token_count(const std::string& text) {
    std::int64_t n = 0;
    bool in_token = false;
    for (char raw : text) {
        bool ws = std::isspace(static_cast<unsigned char>(raw));
        if (!ws && !in_token) ++n;
        in_token = !ws;
    }
    return n;
}

}  // namespace

ProviderResponse ScriptedProvider::complete(const ChatRequest& request) {
    validate_request(request);
    std::string digest = canonical_messages_digest(request.messages);
    const std::string* text = script_.find(request.tag, digest);
    if (!text)
        throw ProviderError("no script entry for " + request.tag + "/" + digest.substr(0, 12) +
                            "...");
    {
        std::lock_guard<std::mutex> lock(mu_);
        ++calls_;
    }
    ProviderResponse resp;
    resp.text = trim(*text);
    std::int64_t prompt_tokens = 0;
    for (const auto& m : request.messages) prompt_tokens += rough_token_count(m.content);
    resp.prompt_tokens = prompt_tokens;
    resp.completion_tokens = rough_token_count(resp.text);
    resp.latency_ms = 0;
    resp.cached = false;
    return resp;
}

// ---------------------------------------------------------------------------
// HttpProvider

HttpProvider::HttpProvider(Endpoint endpoint, RetryPolicy policy, SleepFn sleep)
    : endpoint_(std::move(endpoint)), policy_(policy), sleep_(std::move(sleep)) {
    if (!sleep_) {
        sleep_ = [](std::int64_t ms) {
            std::this_thread::sleep_for(std::chrono::milliseconds(ms));
        };
    }
}

namespace {

// Splits "http://host:port/v1" into scheme://host:port and /v1.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = base_url.find('/', host_start);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string path = base_url.substr(path_start);
    if (path == "/") path = "";
    return {base_url.substr(0, path_start), path};
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

}  // namespace

ProviderResponse HttpProvider::complete(const ChatRequest& request) {
    validate_request(request);
    json body;
    body["model"] = request.model;
    body["messages"] = json::array();
    for (const auto& m : request.messages)
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    body["temperature"] = request.temperature;
    if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
    const std::string payload = body.dump();

    auto [host, prefix] = split_base_url(endpoint_.base_url);
    httplib::Headers headers;
    if (!endpoint_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

    int last_status = 0;
    std::string last_error;
    auto start = std::chrono::steady_clock::now();

    for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
        if (attempt > 1) sleep_(policy_.delay_ms(attempt - 1));

        httplib::Client client(host);
        client.set_connection_timeout(30);
        client.set_read_timeout(600);
        auto result =
            client.Post(prefix + "/chat/completions", headers, payload, "application/json");

        if (!result) {
            last_status = 0;
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        last_status = result->status;
        if (retryable_status(result->status)) {
            last_error = "http status " + std::to_string(result->status);
            continue;
        }
        if (result->status != 200)
            throw ProviderError("request failed with http status " +
                                    std::to_string(result->status) + " (not retryable)",
                                result->status, attempt);

        json resp;
        try {
            resp = json::parse(result->body);
        } catch (const json::exception& e) {
            throw ProviderError(std::string("malformed response body: ") + e.what(),
                                result->status, attempt);
        }
        if (!resp.contains("choices") || !resp["choices"].is_array() || resp["choices"].empty())
            throw ProviderError("response missing choices[0]", result->status, attempt);
        const auto& msg = resp["choices"][0];
        if (!msg.contains("message") || !msg["message"].contains("content"))
            throw ProviderError("response missing choices[0].message.content", result->status,
                                attempt);

        ProviderResponse out;
        out.text = trim(msg["message"]["content"].get<std::string>());
        if (resp.contains("usage")) {
            out.prompt_tokens = resp["usage"].value("prompt_tokens", 0);
            out.completion_tokens = resp["usage"].value("completion_tokens", 0);
        }
        out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
        out.cached = false;
        return out;
    }

    throw ProviderError("exhausted " + std::to_string(policy_.max_attempts) +
                            " attempts; last: " +
                            (last_error.empty() ? "unknown" : last_error),
                        last_status, policy_.max_attempts);
}

// ---------------------------------------------------------------------------
// CachedProvider

CachedProvider::CachedProvider(std::shared_ptr<Provider> inner, std::string cache_dir,
                               std::optional<std::uint64_t> run_seed)
    : inner_(std::move(inner)), dir_(std::move(cache_dir)), run_seed_(run_seed) {}

std::string CachedProvider::cache_key(const std::string& model, const ChatRequest& request,
                                      std::optional<std::uint64_t> run_seed) {
    std::string key = model;
    key.push_back(0x1f);
    key += canonical_messages_digest(request.messages);
    key.push_back(0x1f);
    key += fmt_double(request.temperature);
    key.push_back(0x1f);
    key += request.max_tokens ? std::to_string(*request.max_tokens) : "none";
    if (run_seed) {
        key.push_back(0x1f);
        key += std::to_string(*run_seed);
    }
    return sha256_hex(key);
}

ProviderResponse CachedProvider::complete(const ChatRequest& request) {
    bool cacheable = request.temperature == 0.0 || run_seed_.has_value();
    if (!cacheable) return inner_->complete(request);

    std::string key = cache_key(request.model, request, run_seed_);
    fs::path entry = fs::path(dir_) / (key + ".json");

    std::error_code ec;
    if (fs::exists(entry, ec)) {
        std::ifstream f(entry, std::ios::binary);
        json j;
        try {
            f >> j;
            ProviderResponse hit;
            hit.text = j.at("text").get<std::string>();
            hit.prompt_tokens = j.value("prompt_tokens", 0);
            hit.completion_tokens = j.value("completion_tokens", 0);
            hit.latency_ms = 0;
            hit.cached = true;
            return hit;
        } catch (const json::exception&) {
            // unreadable entry: fall through and refresh it
        }
    }

    ProviderResponse resp = inner_->complete(request);

    json j;
    j["text"] = resp.text;
    j["prompt_tokens"] = resp.prompt_tokens;
    j["completion_tokens"] = resp.completion_tokens;
    fs::create_directories(dir_, ec);
    // tmp name must be unique per thread so concurrent writers of the same
    // key cannot tear each other; rename is atomic
    std::ostringstream tmp_name;
    tmp_name << key << "." << std::this_thread::get_id() << ".tmp";
    fs::path tmp = fs::path(dir_) / tmp_name.str();
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            std::fprintf(stderr, "warning: cache store unwritable (%s), passing through\n",
                         dir_.c_str());
            return resp;
        }
        f << j.dump();
        if (!f.good()) {
            std::fprintf(stderr, "warning: cache write failed (%s), passing through\n",
                         dir_.c_str());
            fs::remove(tmp, ec);
            return resp;
        }
    }
    fs::rename(tmp, entry, ec);
    if (ec) {
        std::fprintf(stderr, "warning: cache rename failed (%s), passing through\n",
                     dir_.c_str());
        fs::remove(tmp, ec);
    }
    return resp;
}

// ---------------------------------------------------------------------------
// RecordingProvider

ProviderResponse RecordingProvider::complete(const ChatRequest& request) {
    {
        std::lock_guard<std::mutex> lock(mu_);
        requests_.push_back(request);
    }
    return inner_->complete(request);
}

std::vector<ChatRequest> RecordingProvider::requests() const {
    std::lock_guard<std::mutex> lock(mu_);
    return requests_;
}

}  // namespace infosuff
