#include "crispo/providers.hpp"

#include "crispo/store.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

namespace crispo {

using nlohmann::json;

TokenUsage word_count_usage(const std::string& prompt, const std::string& completion) {
    TokenUsage u;
    u.prompt_tokens = count_words(prompt);
    u.completion_tokens = count_words(completion);
    return u;
}

std::shared_ptr<ReplayProvider> ReplayProvider::from_file(const std::filesystem::path& path) {
    auto provider = std::make_shared<ReplayProvider>();
    int warnings = 0;
    const auto records = read_jsonl(path, &warnings);
    // sequential entries honor their seq field per role
    std::map<Role, std::vector<std::pair<long, std::string>>> seq;
    for (const auto& r : records) {
        if (!r.contains("role") || !r.contains("completion"))
            throw ConfigError("replay record needs 'role' and 'completion': " + r.dump());
        const Role role = role_from_string(r["role"].get<std::string>());
        const std::string completion = r["completion"].get<std::string>();
        if (r.contains("prompt_sha256")) {
            provider->add_keyed(role, r["prompt_sha256"].get<std::string>(), completion);
        } else if (r.contains("seq")) {
            seq[role].emplace_back(r["seq"].get<long>(), completion);
        } else {
            throw ConfigError("replay record needs 'prompt_sha256' or 'seq': " + r.dump());
        }
    }
    for (auto& [role, entries] : seq) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [_, completion] : entries) provider->add_sequential(role, completion);
    }
    return provider;
}

void ReplayProvider::add_keyed(Role role, const std::string& prompt_sha256,
                               const std::string& completion) {
    std::lock_guard<std::mutex> lock(mu_);
    keyed_[to_string(role) + ":" + prompt_sha256] = completion;
}

void ReplayProvider::add_keyed_prompt(Role role, const std::string& prompt,
                                      const std::string& completion) {
    add_keyed(role, request_sha256(role, prompt), completion);
}

void ReplayProvider::add_sequential(Role role, const std::string& completion) {
    std::lock_guard<std::mutex> lock(mu_);
    sequential_[role].push_back(completion);
}

Completion ReplayProvider::complete(const CompletionRequest& req) {
    const std::string hash = request_sha256(req.role, req.prompt);
    std::string text;
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = keyed_.find(to_string(req.role) + ":" + hash);
        if (it != keyed_.end()) {
            text = it->second;
        } else {
            auto& queue = sequential_[req.role];
            if (queue.empty())
                throw ProviderError("unscripted request for role " + to_string(req.role) +
                                        " (request hash " + hash + ")",
                                    /*retryable=*/false);
            text = queue.front();
            queue.pop_front();
        }
    }
    Completion c;
    c.text = std::move(text);
    c.usage = word_count_usage(req.prompt, c.text);
    c.latency_ms = 0;
    return c;
}

ReplayRecorder::ReplayRecorder(const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::app);
    if (!out_) throw ConfigError("cannot open replay file for append: " + path.string());
}

void ReplayRecorder::record(Role role, const std::string& prompt, const std::string& completion) {
    json j;
    j["role"] = to_string(role);
    j["prompt_sha256"] = sha256_hex(to_string(role) + "\n" + prompt);
    j["completion"] = completion;
    std::lock_guard<std::mutex> lock(mu_);
    out_ << j.dump() << "\n";
    out_.flush();
}

Completion RecordingProvider::complete(const CompletionRequest& req) {
    Completion c = inner_->complete(req);
    recorder_->record(req.role, req.prompt, c.text);
    return c;
}

namespace {

// "http://host:port/some/path" -> {"http://host:port", "/some/path"}
std::pair<std::string, std::string> split_url(const std::string& url) {
    const size_t scheme = url.find("://");
    if (scheme == std::string::npos)
        throw ConfigError("provider url must include a scheme: " + url);
    const size_t path = url.find('/', scheme + 3);
    if (path == std::string::npos) return {url, "/"};
    return {url.substr(0, path), url.substr(path)};
}

json post_json(const std::string& url, const json& body, int timeout_seconds,
               const std::string& bearer) {
    const auto [base, path] = split_url(url);
    httplib::Client client(base);
    client.set_connection_timeout(timeout_seconds, 0);
    client.set_read_timeout(timeout_seconds, 0);
    httplib::Headers headers;
    if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res)
        throw ProviderError("connection to " + url + " failed: " + httplib::to_string(res.error()),
                            /*retryable=*/true);
    if (res->status == 401 || res->status == 403)
        throw ProviderError("authentication failed against " + url + " (status " +
                                std::to_string(res->status) + ")",
                            /*retryable=*/false);
    if (res->status != 200)
        throw ProviderError("provider returned status " + std::to_string(res->status),
                            /*retryable=*/res->status == 408 || res->status == 429 ||
                                res->status >= 500);
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed provider response: ") + e.what(),
                            /*retryable=*/false);
    }
}

std::string bearer_from_env(const std::string& auth_env) {
    if (auth_env.empty()) return "";
    const char* v = std::getenv(auth_env.c_str());
    return v ? v : "";
}

} // namespace

Completion HttpChatProvider::complete(const CompletionRequest& req) {
    json body;
    body["model"] = cfg_.model;
    body["messages"] = json::array({{{"role", "user"}, {"content", req.prompt}}});
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_output_tokens;

    const auto start = std::chrono::steady_clock::now();
    const json res = post_json(cfg_.url, body, cfg_.timeout_seconds, bearer_from_env(cfg_.auth_env));
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);

    Completion c;
    try {
        c.text = res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed provider response: ") + e.what(),
                            /*retryable=*/false);
    }
    if (res.contains("usage")) {
        c.usage.prompt_tokens = res["usage"].value("prompt_tokens", 0L);
        c.usage.completion_tokens = res["usage"].value("completion_tokens", 0L);
    } else {
        c.usage = word_count_usage(req.prompt, c.text);
    }
    c.latency_ms = elapsed.count();
    return c;
}

double ExternalScorerClient::score(const std::string& prediction,
                                   const std::string& counterpart) const {
    json body;
    body["prediction"] = prediction;
    body["reference"] = counterpart;
    const json res = post_json(url_, body, timeout_seconds_, "");
    if (!res.contains("score") || !res["score"].is_number())
        throw ProviderError("scorer response missing numeric 'score'", /*retryable=*/false);
    const double s = res["score"].get<double>();
    if (s < 0.0 || s > 1.0)
        throw ProviderError("scorer returned out-of-range score " + std::to_string(s),
                            /*retryable=*/false);
    return s;
}

std::vector<double> HttpEmbeddingProvider::embed(const std::string& text) const {
    json body;
    body["text"] = text;
    const json res = post_json(url_, body, timeout_seconds_, "");
    if (!res.contains("embedding") || !res["embedding"].is_array())
        throw ProviderError("embedding response missing 'embedding' array", /*retryable=*/false);
    std::vector<double> out;
    out.reserve(res["embedding"].size());
    for (const auto& v : res["embedding"]) out.push_back(v.get<double>());
    return out;
}

} // namespace crispo
