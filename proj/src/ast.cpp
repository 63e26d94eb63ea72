#include "crispo/ast.hpp"

#include "crispo/errors.hpp"

namespace crispo {

namespace {

void check_multi_metric(const OptimizationConfig& cfg) {
    if (cfg.metric_ids.size() < 2)
        throw ConfigError("suffix tuning needs at least two metrics; "
                          "use plain optimize for a single metric");
}

void check_suffix(const std::string& suffix) {
    if (normalize_whitespace(suffix).empty()) throw ConfigError("seed suffix is empty");
    if (suffix.find("INSERT_") != std::string::npos)
        throw ConfigError("a suffix must not contain placeholders");
}

void check_main_prompt(const std::string& main_prompt, const OptimizationConfig& cfg) {
    if (normalize_whitespace(main_prompt).empty()) throw ConfigError("main prompt is empty");
    if (cfg.flags.use_flexible_template) {
        const auto v = validate_template(main_prompt, cfg.task_kind);
        if (!v.ok()) {
            std::string msg = "main prompt does not validate:";
            for (const auto& viol : v.violations) msg += " " + viol + ";";
            throw ConfigError(msg);
        }
    }
}

} // namespace

OptimizeResult tune_suffix(const std::string& main_prompt, const std::string& seed_suffix,
                           OptimizationConfig cfg, DatasetSplits data, Gateway& gateway,
                           std::shared_ptr<EmbeddingProvider> embedder, RunPaths paths) {
    check_multi_metric(cfg);
    check_suffix(seed_suffix);
    check_main_prompt(main_prompt, cfg);

    cfg.mode = RunMode::ast;
    cfg.scoring = ScoringMode::rank_aggregate;
    cfg.frozen_prefix = main_prompt;
    cfg.seed_prompt = seed_suffix;

    Engine engine(std::move(cfg), std::move(data), gateway, std::move(embedder),
                  std::move(paths));
    return engine.run();
}

OptimizeResult full_tune_baseline(const std::string& main_prompt, const std::string& seed_suffix,
                                  OptimizationConfig cfg, DatasetSplits data, Gateway& gateway,
                                  std::shared_ptr<EmbeddingProvider> embedder, RunPaths paths) {
    check_multi_metric(cfg);
    check_suffix(seed_suffix);
    check_main_prompt(main_prompt, cfg);

    cfg.mode = RunMode::full_tune;
    cfg.scoring = ScoringMode::rank_aggregate;
    cfg.frozen_prefix.clear();
    cfg.seed_prompt = main_prompt + "\n" + seed_suffix;

    Engine engine(std::move(cfg), std::move(data), gateway, std::move(embedder),
                  std::move(paths));
    return engine.run();
}

} // namespace crispo
