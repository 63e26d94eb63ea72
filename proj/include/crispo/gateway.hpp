#pragma once

#include "crispo/errors.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace crispo {

enum class Role { task, critique, optimizer };

std::string to_string(Role r);
Role role_from_string(const std::string& s);

struct RoleConfig {
    std::string provider = "replay";      // "replay" | "http"
    std::string url;                      // http only: full endpoint URL
    std::string model;
    std::string auth_env;                 // env var holding the bearer token
    double temperature = 1.0;
    int max_output_tokens = 1024;
    std::optional<int> max_input_words;   // request-side truncation budget
    int timeout_seconds = 120;
};

struct CompletionRequest {
    Role role = Role::task;
    std::string prompt;
    double temperature = 0.0;
    int max_output_tokens = 1024;
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct Completion {
    std::string text;
    TokenUsage usage;
    long latency_ms = 0;
    int attempts = 1;
    bool input_truncated = false;
};

// One slot of a complete_many result; errors are attached positionally so
// the remaining requests still complete.
struct CompletionOutcome {
    std::optional<Completion> completion;
    std::string error;
    bool ok() const { return completion.has_value(); }
};

class Provider {
public:
    virtual ~Provider() = default;
    // Throws ProviderError on failure; `retryable` controls the retry loop.
    virtual Completion complete(const CompletionRequest& req) = 0;
};

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{1000};
    double factor = 2.0;
};

// Uniform completion interface over per-role providers. Owns retries,
// request truncation, and bounded-concurrency fan-out. Safe to share across
// evaluation workers.
class Gateway {
public:
    Gateway() = default;

    void set_provider(Role role, std::shared_ptr<Provider> provider, RoleConfig config);
    const RoleConfig& role_config(Role role) const;
    bool has_role(Role role) const;

    void set_retry_policy(RetryPolicy policy) { retry_ = policy; }

    // Fills decode params from the role config and runs the retry loop.
    Completion complete(CompletionRequest req);

    // At most `parallelism` requests in flight; output order equals input
    // order regardless of completion order.
    std::vector<CompletionOutcome> complete_many(std::vector<CompletionRequest> reqs,
                                                 int parallelism);

private:
    struct RoleEntry {
        std::shared_ptr<Provider> provider;
        RoleConfig config;
    };
    std::map<Role, RoleEntry> roles_;
    RetryPolicy retry_;
};

// First `budget` whitespace-delimited words of `text`; returns text unchanged
// when it fits.
std::string truncate_words(const std::string& text, int budget, bool* truncated = nullptr);

long count_words(const std::string& text);

// Content hash used to key scripted replay completions: sha256 over
// "<role>\n<prompt>".
std::string request_sha256(Role role, const std::string& prompt);

std::string sha256_hex(const std::string& data);

} // namespace crispo
