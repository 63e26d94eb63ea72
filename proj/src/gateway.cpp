#include "crispo/gateway.hpp"

#include <atomic>
#include <cctype>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

namespace crispo {

std::string to_string(Role r) {
    switch (r) {
        case Role::task: return "task";
        case Role::critique: return "critique";
        case Role::optimizer: return "optimizer";
    }
    throw std::logic_error("unreachable role");
}

Role role_from_string(const std::string& s) {
    if (s == "task") return Role::task;
    if (s == "critique") return Role::critique;
    if (s == "optimizer") return Role::optimizer;
    throw ConfigError("unknown role: " + s);
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string request_sha256(Role role, const std::string& prompt) {
    return sha256_hex(to_string(role) + "\n" + prompt);
}

long count_words(const std::string& text) {
    std::istringstream ss(text);
    std::string w;
    long n = 0;
    while (ss >> w) ++n;
    return n;
}

std::string truncate_words(const std::string& text, int budget, bool* truncated) {
    if (truncated) *truncated = false;
    if (budget <= 0) return text;
    size_t i = 0;
    int words = 0;
    const size_t n = text.size();
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= n) break;
        if (words == budget) {
            if (truncated) *truncated = true;
            // trim trailing whitespace of the kept prefix
            size_t end = i;
            while (end > 0 && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
            return text.substr(0, end);
        }
        while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        ++words;
    }
    return text;
}

void Gateway::set_provider(Role role, std::shared_ptr<Provider> provider, RoleConfig config) {
    roles_[role] = RoleEntry{std::move(provider), std::move(config)};
}

const RoleConfig& Gateway::role_config(Role role) const {
    auto it = roles_.find(role);
    if (it == roles_.end()) throw ConfigError("role not configured: " + to_string(role));
    return it->second.config;
}

bool Gateway::has_role(Role role) const { return roles_.count(role) > 0; }

Completion Gateway::complete(CompletionRequest req) {
    auto it = roles_.find(req.role);
    if (it == roles_.end()) throw ConfigError("role not configured: " + to_string(req.role));
    const RoleConfig& cfg = it->second.config;

    bool truncated = false;
    if (cfg.max_input_words)
        req.prompt = truncate_words(req.prompt, *cfg.max_input_words, &truncated);

    int attempt = 0;
    auto delay = retry_.base_delay;
    for (;;) {
        ++attempt;
        try {
            Completion c = it->second.provider->complete(req);
            c.attempts = attempt;
            c.input_truncated = truncated;
            return c;
        } catch (const ProviderError& e) {
            if (!e.retryable || attempt >= retry_.max_attempts) throw;
            std::this_thread::sleep_for(delay);
            delay = std::chrono::milliseconds(
                static_cast<long>(static_cast<double>(delay.count()) * retry_.factor));
        }
    }
}

std::vector<CompletionOutcome> Gateway::complete_many(std::vector<CompletionRequest> reqs,
                                                      int parallelism) {
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    std::vector<CompletionOutcome> results(reqs.size());
    if (reqs.empty()) return results;

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= reqs.size()) return;
            try {
                results[i].completion = complete(reqs[i]);
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
        }
    };

    const size_t n_threads = std::min<size_t>(static_cast<size_t>(parallelism), reqs.size());
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    return results;
}

} // namespace crispo
