#pragma once

#include "crispo/critique.hpp"
#include "crispo/gateway.hpp"
#include "crispo/metrics.hpp"
#include "crispo/optimizer.hpp"
#include "crispo/providers.hpp"
#include "crispo/selection.hpp"
#include "crispo/store.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace crispo {

enum class ScoringMode { primary_metric, rank_aggregate };

enum class RunMode { optimize, ast, full_tune };

std::string to_string(ScoringMode m);
std::string to_string(RunMode m);

struct OptimizationConfig {
    TaskKind task_kind = TaskKind::summarization;
    PromptFamily family = PromptFamily::claude;

    int iterations = 100;
    int candidates_per_step = 3;   // k: candidates sampled per step
    int top_k = 10;                // K: trajectory length shown to the optimizer
    int critique_examples = 10;    // examples passed to the critique call
    int dev_eval_every = 5;
    int io_examples = 2;           // input/output examples shown in the optimizer prompt

    std::optional<int> train_size, dev_size, test_size;   // seeded down-sampling
    uint64_t seed = 0;

    AblationFlags flags;
    CritiqueVariant::Kind critique_variant = CritiqueVariant::Kind::multi_aspect_free;
    std::vector<AspectDef> predefined_aspects;   // empty -> built-in default list

    std::vector<std::string> metric_ids = {"rouge-1"};
    ScoringMode scoring = ScoringMode::primary_metric;

    int icl_shots = 0;             // flexible-template runs only
    int parallelism = 4;
    double max_flagged_fraction = 0.2;

    RunMode mode = RunMode::optimize;
    std::string seed_prompt;       // normalized p0 (or seed suffix in AST mode)
    std::string frozen_prefix;     // AST mode: the frozen main prompt p*

    CritiqueVariant variant() const;
    std::vector<MetricSpec> metrics() const;   // first metric is primary
    const std::string& primary_metric_id() const { return metric_ids.front(); }
};

nlohmann::json config_to_json(const OptimizationConfig& cfg);
OptimizationConfig config_from_json(const nlohmann::json& j);
std::string config_hash(const OptimizationConfig& cfg);

struct PerExampleRow {
    std::string example_id;
    std::string prediction;
    bool tagged = true;
    bool errored = false;
    std::string error;
    std::map<std::string, double> scores;
};

struct EvalResult {
    std::vector<PerExampleRow> rows;
    std::map<std::string, double> aggregates;   // per metric id, mean over rows
    int flagged = 0;    // provider/scorer errors
    int untagged = 0;   // completions without the answer tag
    bool failed = false;   // flagged fraction exceeded max_flagged_fraction
};

struct CandidateState {
    std::string id;
    int iteration = 0;
    std::string text;   // template text; in AST mode the suffix
    std::map<std::string, double> train_scores;
    std::optional<std::map<std::string, double>> dev_scores;
    std::string critique;   // trajectory text; empty when critiques are off
    int flagged = 0;
    int untagged = 0;
};

struct OptimizeResult {
    std::string best_id;
    std::string best_text;       // template text (AST: composed prompt)
    std::string best_suffix;     // AST mode only
    std::optional<double> best_dev_score;   // primary metric (or avg dev rank)
    double best_train_score = 0.0;
    int candidate_count = 0;
    int no_op_steps = 0;
    std::filesystem::path run_dir;
};

// The outer optimization loop: evaluate, critique, select, propose, with
// dev-gated best-prompt selection. One engine step runs at a time; the
// gateway bounds inner parallelism.
class Engine {
public:
    Engine(OptimizationConfig cfg, DatasetSplits data, Gateway& gateway,
           std::shared_ptr<EmbeddingProvider> embedder, RunPaths paths);

    // Runs the full loop from the config's seed prompt. The run directory
    // must be fresh (or hold a compatible interrupted run when `resuming`).
    OptimizeResult run();

    // Continues an interrupted run; refuses on config-hash mismatch.
    static OptimizeResult resume(const RunPaths& paths, const DatasetSplits& data,
                                 Gateway& gateway, std::shared_ptr<EmbeddingProvider> embedder,
                                 const std::optional<std::string>& expected_config_hash =
                                     std::nullopt);

    // Renders, infers, extracts and scores one candidate over a split. The
    // result carries failed=true when more than max_flagged_fraction of the
    // rows hit a provider error.
    EvalResult evaluate_candidate(const std::string& candidate_text,
                                  const std::vector<Example>& split, int iteration,
                                  const std::string& purpose, const std::string& candidate_id);

    // Renders the task prompt for one example (placeholder substitution or
    // the fixed input-at-end layout, ICL shots, contexts).
    std::string render_task_prompt(const std::string& candidate_text, const Example& ex);

    const OptimizationConfig& config() const { return cfg_; }

private:
    OptimizeResult run_loop(int first_iteration);
    void bootstrap_seed_candidate();
    int step(int iteration);   // returns number of accepted candidates
    void dev_gate(int iteration);
    OptimizeResult finish();

    std::string critique_candidate(const CandidateState& cand, const EvalResult& train_eval,
                                   int iteration, size_t slot);
    std::vector<TrajectoryEntry> trajectory() const;
    std::vector<double> pool_train_ranks() const;   // rank-aggregate scoring
    double train_fitness(const CandidateState& c, const std::vector<double>& ranks,
                         size_t index) const;
    bool fitness_better(double a, double b) const;
    size_t best_train_index() const;

    std::string composed_text(const std::string& candidate_text) const;
    void record_candidate(const CandidateState& cand, const EvalResult& eval,
                          const std::string& status);
    void record_transcript(int iteration, Role role, const std::string& purpose,
                           const std::string& candidate_id, const std::string& example_id,
                           const std::string& prompt, const CompletionOutcome& outcome);
    void write_state(int completed_iteration, bool finished);
    void load_existing_records(int completed_iteration);
    double score_external(const MetricSpec& metric, const std::string& prediction,
                          const Example& ex) const;

    OptimizationConfig cfg_;
    DatasetSplits data_;
    Gateway& gateway_;
    std::shared_ptr<EmbeddingProvider> embedder_;
    RunPaths paths_;

    std::vector<MetricSpec> metrics_;
    std::vector<CandidateState> history_;
    std::vector<std::string> history_normalized_;
    std::vector<IoExample> io_examples_;
    std::unique_ptr<RetrievalIndex> icl_index_;
    std::unique_ptr<JsonlWriter> candidates_out_, transcripts_out_, dev_out_;
    std::map<std::string, std::unique_ptr<ExternalScorerClient>> scorers_;
    int next_candidate_ = 0;
    int no_op_steps_ = 0;
    long total_prompt_tokens_ = 0, total_completion_tokens_ = 0;
    std::optional<double> best_dev_so_far_;   // primary-metric runs
};

} // namespace crispo
