#include "crispo/selection.hpp"

#include "crispo/rng.hpp"

#include <doctest.h>

using namespace crispo;

TEST_CASE("cosine basics") {
    const std::vector<double> ex{1, 0}, ey{0, 1}, e2{2, 4}, e1{1, 2};
    CHECK(cosine(ex, ey) == doctest::Approx(0.0));
    CHECK(cosine(ex, ex) == doctest::Approx(1.0));
    CHECK(cosine(e1, e2) == doctest::Approx(1.0));
    CHECK(cosine(ex, std::vector<double>{-1, 0}) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(cosine(ex, std::vector<double>{1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(cosine(ex, std::vector<double>{0, 0}), std::invalid_argument);
}

TEST_CASE("fallback embedder: fixed dimension, nonzero for nonempty text, pure") {
    HashedNgramEmbedder emb;
    const auto v = emb.embed("hello world");
    CHECK(v.size() == HashedNgramEmbedder::kDim);
    double norm = 0;
    for (double x : v) norm += x * x;
    CHECK(norm > 0.0);
    CHECK(emb.embed("hello world") == v);

    const auto single = emb.embed("x");
    double n1 = 0;
    for (double x : single) n1 += x * x;
    CHECK(n1 > 0.0);   // padded, so even one char produces trigrams

    double zero = 0;
    for (double x : emb.embed("")) zero += x * x;
    CHECK(zero == 0.0);
}

TEST_CASE("retrieve: identity ranks first, ties by pool order") {
    HashedNgramEmbedder emb;
    std::vector<std::string> pool = {"the weather is sunny today",
                                     "stock markets fell sharply",
                                     "the weather is rainy today",
                                     "a recipe for apple pie"};
    RetrievalIndex index(pool, emb);

    const auto top = index.retrieve("the weather is sunny today", 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0] == 0);   // exact match first
    CHECK(top[1] == 2);   // nearest neighbor is the other weather line

    const auto all = index.retrieve("the weather is sunny today", 4);
    CHECK(all.size() == 4);

    CHECK_THROWS_AS(index.retrieve("q", 5), std::invalid_argument);
}

TEST_CASE("retrieve: self-exclusion for train-time rendering") {
    HashedNgramEmbedder emb;
    std::vector<std::string> pool = {"aaa bbb ccc", "ddd eee fff", "aaa bbb ddd"};
    RetrievalIndex index(pool, emb);
    const auto top = index.retrieve("aaa bbb ccc", 1, /*exclude_exact=*/true);
    REQUIRE(top.size() == 1);
    CHECK(top[0] == 2);
    CHECK_THROWS_AS(index.retrieve("aaa bbb ccc", 3, true), std::invalid_argument);
}

TEST_CASE("retrieval ordering is invariant under positive rescaling") {
    // scale every pool embedding by a constant through a wrapper provider
    struct Scaled : EmbeddingProvider {
        const EmbeddingProvider& inner;
        double factor;
        Scaled(const EmbeddingProvider& e, double f) : inner(e), factor(f) {}
        std::vector<double> embed(const std::string& t) const override {
            auto v = inner.embed(t);
            for (double& x : v) x *= factor;
            return v;
        }
        std::string id() const override { return "scaled"; }
    };

    HashedNgramEmbedder base;
    Scaled scaled(base, 3.75);
    std::vector<std::string> pool = {"alpha beta gamma", "delta epsilon zeta",
                                     "alpha beta delta", "eta theta iota"};
    RetrievalIndex a(pool, base);
    RetrievalIndex b(pool, scaled);
    for (const std::string query : {"alpha beta", "delta epsilon", "theta"}) {
        CHECK(a.retrieve(query, 4) == b.retrieve(query, 4));
    }
}

TEST_CASE("deterministic ordering across runs") {
    HashedNgramEmbedder emb;
    std::vector<std::string> pool = {"one two three", "four five six", "seven eight nine"};
    RetrievalIndex a(pool, emb);
    RetrievalIndex b(pool, emb);
    CHECK(a.retrieve("one four seven", 3) == b.retrieve("one four seven", 3));
}
