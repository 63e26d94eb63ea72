#pragma once

#include <stdexcept>
#include <string>

namespace crispo {

// Error classes map to CLI exit codes: config=2, provider=3, data=4.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ProviderError : std::runtime_error {
    ProviderError(const std::string& msg, bool retryable_)
        : std::runtime_error(msg), retryable(retryable_) {}
    bool retryable = false;
};

} // namespace crispo
