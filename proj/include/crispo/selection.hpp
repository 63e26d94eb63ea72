#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace crispo {

// Text -> fixed-length vector. The production adapter calls a remote
// encoder; the fallback below is a pure function of the text so the whole
// test suite stays offline.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<double> embed(const std::string& text) const = 0;
    virtual std::string id() const = 0;
};

// Hashed character-trigram frequency vectors, fixed dimension 256.
// Deterministic; nonempty text never maps to the zero vector (inputs are
// padded with boundary markers so even one character yields a trigram).
class HashedNgramEmbedder final : public EmbeddingProvider {
public:
    static constexpr size_t kDim = 256;
    std::vector<double> embed(const std::string& text) const override;
    std::string id() const override { return "hashed-char-ngram-256"; }
};

// dot(u,v)/(|u||v|); throws on dimension mismatch or a zero vector.
double cosine(std::span<const double> u, std::span<const double> v);

// Precomputed embeddings over a fixed pool; retrieval is top-m by cosine,
// ties broken by pool order.
class RetrievalIndex {
public:
    RetrievalIndex(std::vector<std::string> pool_texts, const EmbeddingProvider& provider);

    // exclude_exact: skip pool entries whose text equals the query exactly
    // (train-time self-retrieval). Throws if m exceeds the eligible pool.
    std::vector<size_t> retrieve(const std::string& query, size_t m,
                                 bool exclude_exact = false) const;

    size_t size() const { return texts_.size(); }
    const std::string& text(size_t i) const { return texts_[i]; }

private:
    std::vector<std::string> texts_;
    std::vector<std::vector<double>> embeddings_;
    const EmbeddingProvider& provider_;
};

} // namespace crispo
