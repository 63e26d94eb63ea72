// Benchmark comparing the OpenMP scoring kernels against their serial
// reference implementations on synthetic data. Also verifies the two paths
// agree exactly, since tests rely on that equivalence.

#include "crispo/batch.hpp"
#include "crispo/rng.hpp"
#include "crispo/selection.hpp"

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace crispo;

namespace {

std::string random_text(Rng& rng, int words, int vocab) {
    std::string out;
    for (int i = 0; i < words; ++i) {
        if (i) out.push_back(' ');
        out += "w" + std::to_string(rng.index(static_cast<size_t>(vocab)));
    }
    return out;
}

template <typename Fn>
double time_ms(Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

bool nearly_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

} // namespace

int main(int argc, char** argv) {
    int n_pairs = 20000;
    int n_prompts = 400;
    if (argc > 1) n_pairs = std::atoi(argv[1]);
    if (argc > 2) n_prompts = std::atoi(argv[2]);

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif

    Rng rng(7);
    std::vector<std::string> preds;
    std::vector<std::vector<std::string>> refs;
    for (int i = 0; i < n_pairs; ++i) {
        preds.push_back(random_text(rng, 30, 50));
        refs.push_back({random_text(rng, 25, 50)});
    }
    const MetricSpec rouge1 = parse_metric_id("rouge-1");
    const MetricSpec rougel = parse_metric_id("rouge-l");

    std::vector<double> serial_out, parallel_out;
    std::printf("%-28s %10s %10s %8s\n", "kernel", "serial ms", "omp ms", "speedup");

    for (const auto* metric : {&rouge1, &rougel}) {
        const double ts = time_ms([&] { serial_out = par::score_batch_serial(*metric, preds, refs); });
        const double tp = time_ms([&] { parallel_out = par::score_batch(*metric, preds, refs); });
        if (!nearly_equal(serial_out, parallel_out)) {
            std::printf("MISMATCH in score_batch(%s)\n", metric->id.c_str());
            return 1;
        }
        std::printf("%-28s %10.1f %10.1f %8.2fx\n", ("score_batch " + metric->id).c_str(), ts, tp,
                    ts / tp);
    }

    std::vector<Tokens> prompt_tokens;
    std::vector<std::string> prompts;
    for (int i = 0; i < n_prompts; ++i) prompts.push_back(random_text(rng, 60, 120));
    for (const auto& p : prompts) prompt_tokens.push_back(tokenize(p));

    double s1 = 0, s2 = 0;
    const double ts_r = time_ms([&] { s1 = par::pairwise_rouge_l_mean_serial(prompt_tokens); });
    const double tp_r = time_ms([&] { s2 = par::pairwise_rouge_l_mean(prompt_tokens); });
    if (s1 != s2) {
        std::printf("MISMATCH in pairwise_rouge_l_mean\n");
        return 1;
    }
    std::printf("%-28s %10.1f %10.1f %8.2fx\n", "pairwise_rouge_l_mean", ts_r, tp_r, ts_r / tp_r);

    HashedNgramEmbedder embedder;
    std::vector<std::vector<double>> embs;
    for (const auto& p : prompts) embs.push_back(embedder.embed(p));
    const double ts_c = time_ms([&] { s1 = par::pairwise_cosine_mean_serial(embs); });
    const double tp_c = time_ms([&] { s2 = par::pairwise_cosine_mean(embs); });
    if (s1 != s2) {
        std::printf("MISMATCH in pairwise_cosine_mean\n");
        return 1;
    }
    std::printf("%-28s %10.1f %10.1f %8.2fx\n", "pairwise_cosine_mean", ts_c, tp_c, ts_c / tp_c);

    return 0;
}
