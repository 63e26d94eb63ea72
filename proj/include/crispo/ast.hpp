#pragma once

#include "crispo/engine.hpp"

namespace crispo {

// Seed suffix used when the caller does not supply one.
inline constexpr std::string_view kDefaultSeedSuffix =
    "Every word of your summary must be faithful to the input/conversation";

// Automatic suffix tuning: freeze `main_prompt` (p*), optimize only a suffix
// appended after a newline separator, scored by average metric rank across
// >= 2 metrics. cfg.metric_ids must hold the metric set; scoring mode and
// run mode are forced here.
OptimizeResult tune_suffix(const std::string& main_prompt, const std::string& seed_suffix,
                           OptimizationConfig cfg, DatasetSplits data, Gateway& gateway,
                           std::shared_ptr<EmbeddingProvider> embedder, RunPaths paths);

// Baseline that tunes the whole composed prompt (main + suffix) under the
// same rank-aggregated scoring; the freeze contract does not apply.
OptimizeResult full_tune_baseline(const std::string& main_prompt, const std::string& seed_suffix,
                                  OptimizationConfig cfg, DatasetSplits data, Gateway& gateway,
                                  std::shared_ptr<EmbeddingProvider> embedder, RunPaths paths);

} // namespace crispo
