#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace crispo {

// splitmix64 finalizer; used to derive independent sub-seeds so that
// resumed runs draw exactly the same samples as uninterrupted ones.
inline uint64_t mix_seed(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, std::string_view purpose, uint64_t a = 0, uint64_t b = 0) {
    uint64_t h = base;
    for (char c : purpose) h = mix_seed(h ^ static_cast<uint64_t>(static_cast<unsigned char>(c)));
    h = mix_seed(h ^ a);
    h = mix_seed(h ^ b);
    return h;
}

class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next() { return gen_(); }

    // Uniform in [0, n). Avoids std::uniform_int_distribution, whose output
    // is not pinned by the standard across library implementations.
    size_t index(size_t n) {
        if (n == 0) throw std::invalid_argument("Rng::index: n must be positive");
        return static_cast<size_t>(gen_() % n);
    }

    double uniform01() {
        return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
    }

    // n distinct indices from [0, pool), order randomized (partial Fisher-Yates).
    std::vector<size_t> sample_indices(size_t pool, size_t n) {
        if (n > pool) throw std::invalid_argument("sample_indices: n exceeds pool size");
        std::vector<size_t> idx(pool);
        for (size_t i = 0; i < pool; ++i) idx[i] = i;
        for (size_t i = 0; i < n; ++i) {
            size_t j = i + index(pool - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(n);
        return idx;
    }

private:
    std::mt19937_64 gen_;
};

} // namespace crispo
