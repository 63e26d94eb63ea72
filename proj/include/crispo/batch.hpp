#pragma once

#include "crispo/metrics.hpp"

#include <string>
#include <vector>

// Data-parallel scoring kernels. Each kernel has an OpenMP version used in
// production paths and a serial reference used by tests and the benchmark;
// both must produce bit-identical results (per-element work is independent
// and reductions run in a fixed order).
namespace crispo::par {

// Per-example metric scores; refs[i] are the references for preds[i].
std::vector<double> score_batch(const MetricSpec& metric,
                                const std::vector<std::string>& preds,
                                const std::vector<std::vector<std::string>>& refs);
std::vector<double> score_batch_serial(const MetricSpec& metric,
                                       const std::vector<std::string>& preds,
                                       const std::vector<std::vector<std::string>>& refs);

// Mean ROUGE-L F over all n(n-1)/2 unordered distinct pairs.
double pairwise_rouge_l_mean(const std::vector<Tokens>& token_lists);
double pairwise_rouge_l_mean_serial(const std::vector<Tokens>& token_lists);

// Mean cosine over all unordered distinct pairs of embedding vectors.
double pairwise_cosine_mean(const std::vector<std::vector<double>>& embeddings);
double pairwise_cosine_mean_serial(const std::vector<std::vector<double>>& embeddings);

} // namespace crispo::par
