#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace crispo {

struct PrecisionRecallF {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
};

// F from precision/recall with the 0/0 -> 0 convention.
PrecisionRecallF make_prf(double precision, double recall);

using Tokens = std::vector<std::string>;

// Lowercase, strip punctuation, split on whitespace. Used for ROUGE and
// diversity statistics.
Tokens tokenize(std::string_view text);

// SQuAD-style normalization: lowercase, strip punctuation, drop the
// articles {a, an, the}, collapse whitespace. Used for EM / token-F1.
Tokens normalize_qa(std::string_view text);
std::string normalize_qa_string(std::string_view text);

PrecisionRecallF rouge_n(const Tokens& pred, const Tokens& ref, int n);
PrecisionRecallF rouge_l(const Tokens& pred, const Tokens& ref);

// 1 iff normalized pred equals any normalized ref. Throws on empty refs.
int exact_match(const std::string& pred, const std::vector<std::string>& refs);

// Bag-of-tokens overlap on normalized tokens.
PrecisionRecallF token_f1(const std::string& pred, const std::string& ref);

// Arithmetic mean; throws on empty input.
double aggregate(const std::vector<double>& per_example);

enum class MetricKind { rouge_n, rouge_l, exact_match, token_f1, accuracy, external };

struct MetricSpec {
    std::string id;
    MetricKind kind = MetricKind::rouge_n;
    int ngram = 1;                 // rouge_n only
    bool higher_is_better = true;
    bool primary = false;
    // external metrics only: scorer endpoint and which text to pair the
    // prediction with ("input" for faithfulness-style scorers, "reference"
    // for similarity-style ones).
    std::string endpoint;
    bool pair_with_input = true;
};

// Parses ids like "rouge-1", "rouge-l", "exact-match", "token-f1",
// "accuracy", "external:<url>". Throws std::invalid_argument on unknown ids.
MetricSpec parse_metric_id(const std::string& id);

// Score one prediction against references with a built-in metric
// (multi-reference: max over refs). Throws for external kinds, which need
// the gateway scorer.
double score_prediction(const MetricSpec& metric, const std::string& pred,
                        const std::vector<std::string>& refs);

struct ScoreMatrix {
    std::vector<std::string> candidate_ids;
    std::vector<std::string> metric_ids;
    std::vector<bool> higher_is_better;          // per metric column
    std::vector<std::vector<double>> cells;      // [candidate][metric]

    void validate() const;                       // rectangular, no missing cells
};

// Per-candidate mean rank across metric columns (1 = best within a column,
// honoring the column direction; ties get the mean of the tied positions).
// Lower aggregate rank is better.
std::vector<double> rank_aggregate(const ScoreMatrix& m);

} // namespace crispo
