#pragma once

#include "crispo/meta_prompts.hpp"

#include <optional>
#include <string>
#include <vector>

namespace crispo {

struct AblationFlags {
    bool use_critique = true;
    bool use_cot = true;
    bool use_flexible_template = true;

    // All three off reproduces the OPRO baseline configuration.
    static AblationFlags opro() { return {false, false, false}; }
    bool is_opro() const { return !use_critique && !use_cot && !use_flexible_template; }
};

struct TrajectoryEntry {
    std::string candidate_id;
    std::string template_text;
    double score = 0.0;          // primary-metric aggregate, or average rank
    std::string critique;        // raw critique text; empty when unused
    int iteration = 0;
};

// The K best-scoring distinct candidates, returned ascending by score (worst
// of the elite first, best last); ties prefer the more recent candidate.
// `lower_is_better` flips the ordering for rank-aggregated scores.
std::vector<TrajectoryEntry> select_top_k(const std::vector<TrajectoryEntry>& history, int k,
                                          bool lower_is_better = false);

struct IoExample {
    std::string input;       // article or question
    std::string reference;   // summary or answer
    std::string context;     // QA only; already formatted
};

struct AstOptimizerContext {
    std::string main_prompt;   // frozen p*, shown once; trajectory entries are suffixes
};

struct OptimizerPromptSpec {
    TaskKind kind = TaskKind::summarization;
    PromptFamily family = PromptFamily::claude;
    AblationFlags flags;
    bool rank_scored = false;   // scores are average metric ranks (lower better)
    std::optional<AstOptimizerContext> ast;
};

// Formats a candidate score the way it appears in the meta-prompt: primary
// metrics as 100-scaled values with one decimal, ranks as plain one-decimal
// values.
std::string format_trajectory_score(double score, bool rank_scored);

// Instantiates the receptive optimizer meta-prompt from the elite trajectory
// (ascending by score) and the fixed I/O examples.
std::string build_optimizer_prompt(const std::vector<TrajectoryEntry>& elite,
                                   const std::vector<IoExample>& io_examples,
                                   const OptimizerPromptSpec& spec);

struct ParsedCandidates {
    std::vector<std::string> valid;
    int invalid = 0;     // failed template validation
    int duplicates = 0;  // matched an existing history entry (or a sibling span)
};

// Extracts <instruction> spans and validates each as a candidate. In
// flexible mode candidates validate as templates; in fixed-layout (or
// suffix) mode they must be placeholder-free. Duplicates are detected by
// whitespace-normalized comparison against `history_normalized`.
ParsedCandidates parse_new_candidates(const std::string& completion, int expected, TaskKind kind,
                                      bool flexible_template,
                                      const std::vector<std::string>& history_normalized);

} // namespace crispo
