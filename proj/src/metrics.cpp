#include "crispo/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace crispo {

PrecisionRecallF make_prf(double precision, double recall) {
    PrecisionRecallF out;
    out.precision = precision;
    out.recall = recall;
    out.f = (precision + recall > 0.0) ? 2.0 * precision * recall / (precision + recall) : 0.0;
    return out;
}

Tokens tokenize(std::string_view text) {
    Tokens out;
    std::string cur;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            if (!cur.empty()) { out.push_back(cur); cur.clear(); }
        } else if (std::ispunct(c)) {
            // stripped
        } else {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

Tokens normalize_qa(std::string_view text) {
    Tokens toks = tokenize(text);
    Tokens out;
    out.reserve(toks.size());
    for (auto& t : toks) {
        if (t == "a" || t == "an" || t == "the") continue;
        out.push_back(std::move(t));
    }
    return out;
}

std::string normalize_qa_string(std::string_view text) {
    Tokens toks = normalize_qa(text);
    std::string out;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (i) out.push_back(' ');
        out += toks[i];
    }
    return out;
}

namespace {

using CountMap = std::unordered_map<std::string, long>;

CountMap ngram_counts(const Tokens& toks, int n) {
    CountMap counts;
    if (n <= 0 || toks.size() < static_cast<size_t>(n)) return counts;
    for (size_t i = 0; i + n <= toks.size(); ++i) {
        std::string key = toks[i];
        for (int j = 1; j < n; ++j) {
            key.push_back('\x1f');
            key += toks[i + j];
        }
        ++counts[key];
    }
    return counts;
}

long clipped_overlap(const CountMap& a, const CountMap& b) {
    long matches = 0;
    for (const auto& [key, cnt] : a) {
        auto it = b.find(key);
        if (it != b.end()) matches += std::min(cnt, it->second);
    }
    return matches;
}

} // namespace

PrecisionRecallF rouge_n(const Tokens& pred, const Tokens& ref, int n) {
    if (n < 1) throw std::invalid_argument("rouge_n: n must be >= 1");
    const CountMap pc = ngram_counts(pred, n);
    const CountMap rc = ngram_counts(ref, n);
    long pred_total = 0, ref_total = 0;
    for (const auto& [_, c] : pc) pred_total += c;
    for (const auto& [_, c] : rc) ref_total += c;
    const long matches = clipped_overlap(pc, rc);
    const double precision = pred_total > 0 ? static_cast<double>(matches) / pred_total : 0.0;
    const double recall = ref_total > 0 ? static_cast<double>(matches) / ref_total : 0.0;
    return make_prf(precision, recall);
}

PrecisionRecallF rouge_l(const Tokens& pred, const Tokens& ref) {
    const size_t m = pred.size(), n = ref.size();
    if (m == 0 || n == 0) return make_prf(0.0, 0.0);
    // Two-row LCS DP.
    std::vector<long> prev(n + 1, 0), cur(n + 1, 0);
    for (size_t i = 1; i <= m; ++i) {
        for (size_t j = 1; j <= n; ++j) {
            if (pred[i - 1] == ref[j - 1]) cur[j] = prev[j - 1] + 1;
            else cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    const double lcs = static_cast<double>(prev[n]);
    return make_prf(lcs / m, lcs / n);
}

int exact_match(const std::string& pred, const std::vector<std::string>& refs) {
    if (refs.empty()) throw std::invalid_argument("exact_match: refs must be nonempty");
    const std::string p = normalize_qa_string(pred);
    for (const auto& r : refs) {
        if (p == normalize_qa_string(r)) return 1;
    }
    return 0;
}

PrecisionRecallF token_f1(const std::string& pred, const std::string& ref) {
    const Tokens pt = normalize_qa(pred);
    const Tokens rt = normalize_qa(ref);
    CountMap pc, rc;
    for (const auto& t : pt) ++pc[t];
    for (const auto& t : rt) ++rc[t];
    const long matches = clipped_overlap(pc, rc);
    const double precision = pt.empty() ? 0.0 : static_cast<double>(matches) / pt.size();
    const double recall = rt.empty() ? 0.0 : static_cast<double>(matches) / rt.size();
    return make_prf(precision, recall);
}

double aggregate(const std::vector<double>& per_example) {
    if (per_example.empty()) throw std::invalid_argument("aggregate: empty score list");
    double sum = 0.0;
    for (double x : per_example) sum += x;
    return sum / static_cast<double>(per_example.size());
}

MetricSpec parse_metric_id(const std::string& id) {
    MetricSpec spec;
    spec.id = id;
    if (id == "rouge-l") {
        spec.kind = MetricKind::rouge_l;
    } else if (id.rfind("rouge-", 0) == 0) {
        spec.kind = MetricKind::rouge_n;
        const std::string tail = id.substr(6);
        if (tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos)
            throw std::invalid_argument("unknown metric id: " + id);
        spec.ngram = std::stoi(tail);
        if (spec.ngram < 1) throw std::invalid_argument("rouge-n requires n >= 1: " + id);
    } else if (id == "exact-match") {
        spec.kind = MetricKind::exact_match;
    } else if (id == "token-f1") {
        spec.kind = MetricKind::token_f1;
    } else if (id == "accuracy") {
        spec.kind = MetricKind::accuracy;
    } else if (id.rfind("external:", 0) == 0) {
        spec.kind = MetricKind::external;
        spec.endpoint = id.substr(9);
        if (spec.endpoint.empty())
            throw std::invalid_argument("external metric needs an endpoint: " + id);
    } else {
        throw std::invalid_argument("unknown metric id: " + id);
    }
    return spec;
}

namespace {

// Accuracy keeps articles: a multiple-choice option like "a" must survive.
std::string normalize_accuracy(std::string_view text) {
    Tokens toks = tokenize(text);
    std::string out;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (i) out.push_back(' ');
        out += toks[i];
    }
    return out;
}

} // namespace

double score_prediction(const MetricSpec& metric, const std::string& pred,
                        const std::vector<std::string>& refs) {
    if (refs.empty()) throw std::invalid_argument("score_prediction: refs must be nonempty");
    switch (metric.kind) {
        case MetricKind::rouge_n: {
            const Tokens pt = tokenize(pred);
            double best = 0.0;
            for (const auto& r : refs) best = std::max(best, rouge_n(pt, tokenize(r), metric.ngram).f);
            return best;
        }
        case MetricKind::rouge_l: {
            const Tokens pt = tokenize(pred);
            double best = 0.0;
            for (const auto& r : refs) best = std::max(best, rouge_l(pt, tokenize(r)).f);
            return best;
        }
        case MetricKind::exact_match:
            return static_cast<double>(exact_match(pred, refs));
        case MetricKind::token_f1: {
            double best = 0.0;
            for (const auto& r : refs) best = std::max(best, token_f1(pred, r).f);
            return best;
        }
        case MetricKind::accuracy: {
            const std::string p = normalize_accuracy(pred);
            for (const auto& r : refs)
                if (p == normalize_accuracy(r)) return 1.0;
            return 0.0;
        }
        case MetricKind::external:
            throw std::logic_error("external metrics are scored through the gateway");
    }
    throw std::logic_error("unreachable metric kind");
}

void ScoreMatrix::validate() const {
    if (cells.size() != candidate_ids.size())
        throw std::invalid_argument("ScoreMatrix: row count mismatch");
    if (higher_is_better.size() != metric_ids.size())
        throw std::invalid_argument("ScoreMatrix: direction count mismatch");
    for (const auto& row : cells)
        if (row.size() != metric_ids.size())
            throw std::invalid_argument("ScoreMatrix: ragged rows");
}

std::vector<double> rank_aggregate(const ScoreMatrix& m) {
    m.validate();
    const size_t n = m.candidate_ids.size();
    const size_t k = m.metric_ids.size();
    if (n == 0 || k == 0)
        throw std::invalid_argument("rank_aggregate: need >=1 candidate and >=1 metric");

    std::vector<double> rank_sum(n, 0.0);
    std::vector<size_t> order(n);
    for (size_t col = 0; col < k; ++col) {
        const bool higher = m.higher_is_better[col];
        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            const double va = m.cells[a][col], vb = m.cells[b][col];
            if (va != vb) return higher ? va > vb : va < vb;
            return a < b;
        });
        // fractional ranking: ties take the mean of their positions
        size_t i = 0;
        while (i < n) {
            size_t j = i;
            while (j + 1 < n && m.cells[order[j + 1]][col] == m.cells[order[i]][col]) ++j;
            const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (size_t t = i; t <= j; ++t) rank_sum[order[t]] += mean_rank;
            i = j + 1;
        }
    }
    for (double& r : rank_sum) r /= static_cast<double>(k);
    return rank_sum;
}

} // namespace crispo
