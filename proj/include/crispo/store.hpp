#pragma once

#include "crispo/selection.hpp"
#include "crispo/templates.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace crispo {

struct Example {
    std::string id;
    std::string input;
    std::vector<std::string> references;
    std::vector<std::string> contexts;   // pre-retrieved passages, order preserved
    std::vector<std::string> choices;    // multiple-choice options
    std::string gold_choice;

    // references, or the gold choice when only choices are given
    std::vector<std::string> gold_texts() const;
};

struct SplitSizes {
    std::optional<int> train, dev, test;
};

struct DatasetSplits {
    std::vector<Example> train, dev, test;
    TaskKind task_kind = TaskKind::summarization;
    uint64_t sample_seed = 0;
    int dropped_records = 0;             // degenerate rows skipped at ingestion
    std::vector<int> source_sizes;       // pre-sampling sizes of train/dev/test
};

// Reads {train,dev,test}.jsonl from `dir` (test optional). Records are
// {id?, input, references[]?, contexts[]?, choices[]?, gold_choice?}.
// Degenerate records (empty input, no reference/gold choice) are dropped and
// counted; malformed records raise DataError naming the line. Optional
// seeded down-sampling keeps source order.
DatasetSplits load_dataset(const std::filesystem::path& dir, TaskKind kind,
                           const SplitSizes& sizes = {}, uint64_t seed = 0);

struct DiversityStats {
    int prompt_count = 0;
    double len_mean = 0.0;
    double len_std = 0.0;
    int vocab = 0;
    double rouge_l_mean = 0.0;
    double cosine_mean = 0.0;
};

// Length/vocabulary/pairwise-overlap statistics over a set of prompt texts.
// Requires >= 2 prompts; pairwise means run over all unordered distinct pairs.
DiversityStats diversity_report(const std::vector<std::string>& prompts,
                                const EmbeddingProvider& embedder);

std::string diversity_csv(const DiversityStats& s);

// --- run directory -------------------------------------------------------

struct RunPaths {
    std::filesystem::path dir;
    std::filesystem::path config() const { return dir / "config.json"; }
    std::filesystem::path candidates() const { return dir / "candidates.jsonl"; }
    std::filesystem::path transcripts() const { return dir / "transcripts.jsonl"; }
    std::filesystem::path dev_evals() const { return dir / "dev_evals.jsonl"; }
    std::filesystem::path best_prompt() const { return dir / "best_prompt.txt"; }
    std::filesystem::path diversity() const { return dir / "diversity.csv"; }
    std::filesystem::path state() const { return dir / "state.json"; }
    std::filesystem::path meta() const { return dir / "meta.json"; }
    std::filesystem::path main_prompt() const { return dir / "main_prompt.txt"; }  // AST runs
    std::filesystem::path best_suffix() const { return dir / "best_suffix.txt"; }  // AST runs
};

// Append-only JSONL writer; one flushed line per record.
class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path);
    void append(const nlohmann::json& record);

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

// Reads every complete line; a truncated final line (no trailing newline or
// invalid JSON) is dropped with a warning count instead of failing the read.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path,
                                       int* truncated_warnings = nullptr);

// Write-then-rename so readers never observe a partial file.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

// Keep only records satisfying `keep`, rewriting atomically. Used by resume
// to drop records from a partially executed iteration.
void filter_jsonl(const std::filesystem::path& path,
                  const std::function<bool(const nlohmann::json&)>& keep);

} // namespace crispo
