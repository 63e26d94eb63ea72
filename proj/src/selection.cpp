#include "crispo/selection.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>

namespace crispo {

namespace {

uint64_t fnv1a(const char* data, size_t len) {
    uint64_t h = 1469598103934665603ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace

std::vector<double> HashedNgramEmbedder::embed(const std::string& text) const {
    std::vector<double> v(kDim, 0.0);
    if (text.empty()) return v;
    std::string padded;
    padded.reserve(text.size() + 4);
    padded.push_back('\x02');
    padded.push_back('\x02');
    padded += text;
    padded.push_back('\x03');
    padded.push_back('\x03');
    for (size_t i = 0; i + 3 <= padded.size(); ++i) {
        v[fnv1a(padded.data() + i, 3) % kDim] += 1.0;
    }
    return v;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw std::invalid_argument("cosine: dimension mismatch");
    if (u.empty())
        throw std::invalid_argument("cosine: empty vectors");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0)
        throw std::invalid_argument("cosine: zero vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

RetrievalIndex::RetrievalIndex(std::vector<std::string> pool_texts,
                               const EmbeddingProvider& provider)
    : texts_(std::move(pool_texts)), provider_(provider) {
    embeddings_.resize(texts_.size());
    const long n = static_cast<long>(texts_.size());
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        try {
            embeddings_[i] = provider_.embed(texts_[i]);
        } catch (...) {
#pragma omp critical(crispo_index_err)
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
}

std::vector<size_t> RetrievalIndex::retrieve(const std::string& query, size_t m,
                                             bool exclude_exact) const {
    std::vector<size_t> eligible;
    eligible.reserve(texts_.size());
    for (size_t i = 0; i < texts_.size(); ++i) {
        if (exclude_exact && texts_[i] == query) continue;
        eligible.push_back(i);
    }
    if (m > eligible.size())
        throw std::invalid_argument("retrieve: m exceeds pool size");

    const std::vector<double> q = provider_.embed(query);
    std::vector<double> sims(eligible.size(), 0.0);
    // Serial scan: pool sizes are small and cosine throws on degenerate
    // vectors, which must surface as a normal exception.
    for (size_t i = 0; i < eligible.size(); ++i) {
        sims[i] = cosine(q, embeddings_[eligible[i]]);
    }
    std::vector<size_t> order(eligible.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return sims[a] > sims[b]; });
    std::vector<size_t> out;
    out.reserve(m);
    for (size_t i = 0; i < m; ++i) out.push_back(eligible[order[i]]);
    return out;
}

} // namespace crispo
