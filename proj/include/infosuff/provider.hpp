#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace infosuff {

struct ProviderError : std::runtime_error {
    ProviderError(const std::string& msg, int status = 0, int attempts = 0)
        : std::runtime_error(msg), http_status(status), attempts(attempts) {}
    int http_status;  // 0 when not an HTTP failure
    int attempts;
};

enum class Role { system, user, assistant };

std::string to_string(Role r);
Role role_from_string(const std::string& s);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::optional<int> max_tokens;
    std::string tag;  // pipeline stage label, e.g. "stage1", "adversary_probed"
};

struct ProviderResponse {
    std::string text;  // assistant content, whitespace-trimmed at both ends only
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t latency_ms = 0;
    bool cached = false;
};

struct RetryPolicy {
    int max_attempts = 4;
    std::int64_t backoff_base_ms = 500;
    double backoff_factor = 2.0;

    // backoff_base_ms * factor^(attempt-1), capped at 60 s
    std::int64_t delay_ms(int attempt) const;
};

// SHA-256 over role/content pairs joined with unit separators. Stable
// identity for scripted lookups and cache keys.
std::string canonical_messages_digest(const std::vector<ChatMessage>& messages);

class Provider {
 public:
    virtual ~Provider() = default;
    virtual ProviderResponse complete(const ChatRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Scripted provider: a pure function of (request, script). Lookup key is
// (tag, digest of canonicalized messages). Enables fully offline runs.

class Script {
 public:
    void add(const std::string& tag, const std::string& digest, std::string text);
    // Convenience: digests the request's messages.
    void add(const ChatRequest& request, std::string text);

    const std::string* find(const std::string& tag, const std::string& digest) const;

    static Script from_json_file(const std::string& path);
    void save_json_file(const std::string& path) const;

    std::size_t size() const { return entries_.size(); }

 private:
    std::map<std::pair<std::string, std::string>, std::string> entries_;
};

class ScriptedProvider : public Provider {
 public:
    explicit ScriptedProvider(Script script) : script_(std::move(script)) {}

    ProviderResponse complete(const ChatRequest& request) override;

    std::int64_t call_count() const { return calls_; }

 private:
    Script script_;
    std::int64_t calls_ = 0;
    std::mutex mu_;
};

// ---------------------------------------------------------------------------
// HTTP provider: OpenAI-style chat completions over {base_url}/chat/completions.

struct Endpoint {
    std::string base_url;  // e.g. "http://localhost:8080/v1"
    std::string api_key;   // resolved from the configured env var
};

class HttpProvider : public Provider {
 public:
    using SleepFn = std::function<void(std::int64_t ms)>;

    HttpProvider(Endpoint endpoint, RetryPolicy policy, SleepFn sleep = nullptr);

    ProviderResponse complete(const ChatRequest& request) override;

 private:
    Endpoint endpoint_;
    RetryPolicy policy_;
    SleepFn sleep_;
};

// ---------------------------------------------------------------------------
// Cache wrapper: content-addressed directory store, one file per entry,
// written atomically (tmp + rename). Only deterministic requests are
// cached: temperature 0, or any temperature when a run seed pins the key.

class CachedProvider : public Provider {
 public:
    CachedProvider(std::shared_ptr<Provider> inner, std::string cache_dir,
                   std::optional<std::uint64_t> run_seed = std::nullopt);

    ProviderResponse complete(const ChatRequest& request) override;

    static std::string cache_key(const std::string& model, const ChatRequest& request,
                                 std::optional<std::uint64_t> run_seed);

 private:
    std::shared_ptr<Provider> inner_;
    std::string dir_;
    std::optional<std::uint64_t> run_seed_;
};

// ---------------------------------------------------------------------------
// Records every request passing through; backs the prompt-hygiene checks.

class RecordingProvider : public Provider {
 public:
    explicit RecordingProvider(std::shared_ptr<Provider> inner) : inner_(std::move(inner)) {}

    ProviderResponse complete(const ChatRequest& request) override;

    std::vector<ChatRequest> requests() const;

 private:
    std::shared_ptr<Provider> inner_;
    mutable std::mutex mu_;
    std::vector<ChatRequest> requests_;
};

}  // namespace infosuff
