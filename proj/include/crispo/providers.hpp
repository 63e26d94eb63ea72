#pragma once

#include "crispo/gateway.hpp"
#include "crispo/selection.hpp"

#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>

namespace crispo {

// Deterministic LLM stand-in serving scripted completions. Two scripting
// modes can coexist:
//   keyed      — {role, prompt_sha256, completion}: exact content match
//   sequential — {role, seq, completion}: served in seq order per role,
//                for tests that don't want to precompute hashes
// Lookup tries the keyed table first, then the role's queue; an unscripted
// request fails with an error naming the request hash.
class ReplayProvider : public Provider {
public:
    ReplayProvider() = default;

    static std::shared_ptr<ReplayProvider> from_file(const std::filesystem::path& path);

    void add_keyed(Role role, const std::string& prompt_sha256, const std::string& completion);
    void add_keyed_prompt(Role role, const std::string& prompt, const std::string& completion);
    void add_sequential(Role role, const std::string& completion);

    Completion complete(const CompletionRequest& req) override;

private:
    std::mutex mu_;
    std::map<std::string, std::string> keyed_;            // "<role>:<sha>" -> completion
    std::map<Role, std::deque<std::string>> sequential_;
};

// Writes a keyed replay file from recorded (role, prompt, completion) rows.
class ReplayRecorder {
public:
    explicit ReplayRecorder(const std::filesystem::path& path);
    void record(Role role, const std::string& prompt, const std::string& completion);

private:
    std::ofstream out_;
    std::mutex mu_;
};

// Wraps another provider and records every successful completion.
class RecordingProvider : public Provider {
public:
    RecordingProvider(std::shared_ptr<Provider> inner, std::shared_ptr<ReplayRecorder> recorder)
        : inner_(std::move(inner)), recorder_(std::move(recorder)) {}
    Completion complete(const CompletionRequest& req) override;

private:
    std::shared_ptr<Provider> inner_;
    std::shared_ptr<ReplayRecorder> recorder_;
};

// OpenAI-compatible chat-completion adapter: POST {model, messages,
// temperature, max_tokens} to the configured URL, bearer token from the
// env var named in the role config.
class HttpChatProvider : public Provider {
public:
    explicit HttpChatProvider(RoleConfig cfg) : cfg_(std::move(cfg)) {}
    Completion complete(const CompletionRequest& req) override;

private:
    RoleConfig cfg_;
};

// External-metric adapter: one decimal score in [0,1] per
// (prediction, reference-or-input) pair.
class ExternalScorerClient {
public:
    explicit ExternalScorerClient(std::string url, int timeout_seconds = 60)
        : url_(std::move(url)), timeout_seconds_(timeout_seconds) {}
    double score(const std::string& prediction, const std::string& counterpart) const;

private:
    std::string url_;
    int timeout_seconds_;
};

// Remote embedding adapter: text in, fixed-length decimal vector out.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(std::string url, int timeout_seconds = 60)
        : url_(std::move(url)), timeout_seconds_(timeout_seconds) {}
    std::vector<double> embed(const std::string& text) const override;
    std::string id() const override { return "http:" + url_; }

private:
    std::string url_;
    int timeout_seconds_;
};

// Deterministic token accounting for offline providers.
TokenUsage word_count_usage(const std::string& prompt, const std::string& completion);

} // namespace crispo
