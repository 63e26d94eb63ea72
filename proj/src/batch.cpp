#include "crispo/batch.hpp"
#include "crispo/selection.hpp"

#include <exception>
#include <mutex>
#include <stdexcept>

namespace crispo::par {

namespace {

// Exceptions must not escape an OpenMP region; capture the first one and
// rethrow after the join.
class FirstError {
public:
    template <typename Fn>
    void run(Fn&& fn) noexcept {
        try {
            fn();
        } catch (...) {
            std::lock_guard<std::mutex> lock(mu_);
            if (!err_) err_ = std::current_exception();
        }
    }
    void rethrow_if_any() const {
        if (err_) std::rethrow_exception(err_);
    }

private:
    std::mutex mu_;
    std::exception_ptr err_;
};

std::vector<std::pair<int, int>> unordered_pairs(size_t n) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return pairs;
}

// Sum in index order regardless of how elements were produced, so the
// parallel and serial kernels agree exactly.
double ordered_mean(const std::vector<double>& xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

} // namespace

std::vector<double> score_batch(const MetricSpec& metric,
                                const std::vector<std::string>& preds,
                                const std::vector<std::vector<std::string>>& refs) {
    if (preds.size() != refs.size())
        throw std::invalid_argument("score_batch: preds/refs size mismatch");
    std::vector<double> out(preds.size(), 0.0);
    const long n = static_cast<long>(preds.size());
    FirstError err;
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        err.run([&, i] { out[i] = score_prediction(metric, preds[i], refs[i]); });
    }
    err.rethrow_if_any();
    return out;
}

std::vector<double> score_batch_serial(const MetricSpec& metric,
                                       const std::vector<std::string>& preds,
                                       const std::vector<std::vector<std::string>>& refs) {
    if (preds.size() != refs.size())
        throw std::invalid_argument("score_batch: preds/refs size mismatch");
    std::vector<double> out(preds.size(), 0.0);
    for (size_t i = 0; i < preds.size(); ++i)
        out[i] = score_prediction(metric, preds[i], refs[i]);
    return out;
}

double pairwise_rouge_l_mean(const std::vector<Tokens>& token_lists) {
    if (token_lists.size() < 2)
        throw std::invalid_argument("pairwise stats need >=2 items");
    const auto pairs = unordered_pairs(token_lists.size());
    std::vector<double> vals(pairs.size(), 0.0);
    const long np = static_cast<long>(pairs.size());
#pragma omp parallel for schedule(dynamic)
    for (long p = 0; p < np; ++p) {
        vals[p] = rouge_l(token_lists[pairs[p].first], token_lists[pairs[p].second]).f;
    }
    return ordered_mean(vals);
}

double pairwise_rouge_l_mean_serial(const std::vector<Tokens>& token_lists) {
    if (token_lists.size() < 2)
        throw std::invalid_argument("pairwise stats need >=2 items");
    const auto pairs = unordered_pairs(token_lists.size());
    std::vector<double> vals(pairs.size(), 0.0);
    for (size_t p = 0; p < pairs.size(); ++p)
        vals[p] = rouge_l(token_lists[pairs[p].first], token_lists[pairs[p].second]).f;
    return ordered_mean(vals);
}

double pairwise_cosine_mean(const std::vector<std::vector<double>>& embeddings) {
    if (embeddings.size() < 2)
        throw std::invalid_argument("pairwise stats need >=2 items");
    const auto pairs = unordered_pairs(embeddings.size());
    std::vector<double> vals(pairs.size(), 0.0);
    const long np = static_cast<long>(pairs.size());
    FirstError err;
#pragma omp parallel for schedule(static)
    for (long p = 0; p < np; ++p) {
        err.run([&, p] { vals[p] = cosine(embeddings[pairs[p].first], embeddings[pairs[p].second]); });
    }
    err.rethrow_if_any();
    return ordered_mean(vals);
}

double pairwise_cosine_mean_serial(const std::vector<std::vector<double>>& embeddings) {
    if (embeddings.size() < 2)
        throw std::invalid_argument("pairwise stats need >=2 items");
    const auto pairs = unordered_pairs(embeddings.size());
    std::vector<double> vals(pairs.size(), 0.0);
    for (size_t p = 0; p < pairs.size(); ++p)
        vals[p] = cosine(embeddings[pairs[p].first], embeddings[pairs[p].second]);
    return ordered_mean(vals);
}

} // namespace crispo::par
