#include "crispo/optimizer.hpp"

#include "crispo/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

namespace crispo {

std::vector<TrajectoryEntry> select_top_k(const std::vector<TrajectoryEntry>& history, int k,
                                          bool lower_is_better) {
    if (history.empty()) throw std::invalid_argument("select_top_k: empty history");
    if (k < 1) throw std::invalid_argument("select_top_k: K must be >= 1");

    auto better = [&](const TrajectoryEntry& a, const TrajectoryEntry& b) {
        if (a.score != b.score) return lower_is_better ? a.score < b.score : a.score > b.score;
        return a.iteration > b.iteration;   // ties prefer the more recent candidate
    };

    std::vector<TrajectoryEntry> sorted = history;
    std::sort(sorted.begin(), sorted.end(), better);
    if (sorted.size() > static_cast<size_t>(k)) sorted.resize(static_cast<size_t>(k));
    std::reverse(sorted.begin(), sorted.end());   // ascending: worst of the elite first
    return sorted;
}

std::string format_trajectory_score(double score, bool rank_scored) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", rank_scored ? score : score * 100.0);
    return buf;
}

std::string build_optimizer_prompt(const std::vector<TrajectoryEntry>& elite,
                                   const std::vector<IoExample>& io_examples,
                                   const OptimizerPromptSpec& spec) {
    if (elite.empty()) throw std::invalid_argument("build_optimizer_prompt: empty trajectory");
    const meta::OptimizerParts& parts = meta::optimizer_parts(spec.kind, spec.family);

    std::string out = parts.header + "\n\n";

    if (!io_examples.empty()) {
        out += parts.examples_intro + "\n";
        out += meta::expand_stanzas(parts.io_stanza, io_examples.size(),
                                    [&](std::string stanza, size_t i) {
                                        const IoExample& ex = io_examples[i];
                                        if (spec.kind == TaskKind::summarization) {
                                            stanza = meta::fill_slot(stanza, "article", ex.input);
                                            stanza = meta::fill_slot(stanza, "summary",
                                                                     ex.reference);
                                        } else {
                                            stanza = meta::fill_slot(stanza, "question", ex.input);
                                            stanza = meta::fill_slot(stanza, "context", ex.context);
                                            stanza = meta::fill_slot(stanza, "answer",
                                                                     ex.reference);
                                        }
                                        return stanza;
                                    });
        out += "\n\n";
    }

    if (spec.ast) {
        out += "The task prompt is a fixed main prompt followed by a tunable suffix. The main "
               "prompt is:\n<main_prompt>\n" +
               spec.ast->main_prompt +
               "\n</main_prompt>\nEach instruction below is a suffix appended to the main "
               "prompt. Generate a new suffix only.\n\n";
    }

    out += (spec.flags.use_critique ? parts.trajectory_intro_with_critiques
                                    : parts.trajectory_intro_scores_only) +
           "\n";
    if (spec.rank_scored) {
        out += "The score of each instruction is its average rank across all metrics over the "
               "evaluated candidates; a lower value is better.\n";
    }
    const std::string& stanza_shape = spec.flags.use_critique ? parts.rated_stanza_with_critique
                                                              : parts.rated_stanza_scores_only;
    out += meta::expand_stanzas(stanza_shape, elite.size(), [&](std::string stanza, size_t i) {
        const TrajectoryEntry& e = elite[i];
        stanza = meta::fill_slot(stanza, "instruction", e.template_text);
        stanza = meta::fill_slot(stanza, "score",
                                 format_trajectory_score(e.score, spec.rank_scored));
        if (spec.flags.use_critique) stanza = meta::fill_slot(stanza, "critique", e.critique);
        return stanza;
    });
    out += "\n\n" + parts.generate_directive + "\n\n";

    std::string vary = spec.flags.use_flexible_template ? parts.cot_vary_flexible
                                                        : parts.cot_vary_fixed;
    vary = meta::fill_slot(vary, "question_placeholder", kQuestionPlaceholder);
    vary = meta::fill_slot(vary, "context_placeholder", kContextPlaceholder);

    if (spec.flags.use_cot) {
        out += parts.cot_intro + "\n\n";
        out += parts.cot_compare + "\n" + parts.cot_apply + "\n" + vary + "\n" + parts.cot_write +
               "\n";
        if (spec.flags.use_flexible_template) {
            for (size_t i = 0; i < parts.placeholder_constraints.size(); ++i)
                out += std::to_string(5 + i) + ". " + parts.placeholder_constraints[i] + "\n";
        }
    } else {
        out += parts.write_instruction + "\n";
        if (spec.flags.use_flexible_template) {
            for (const auto& c : parts.placeholder_constraints) out += c + "\n";
        }
    }
    return out;
}

namespace {

std::vector<std::string> extract_all_spans(const std::string& text, const std::string& tag) {
    std::vector<std::string> out;
    const std::string open = "<" + tag + ">";
    const std::string close = "</" + tag + ">";
    size_t pos = 0;
    while (true) {
        const size_t b = text.find(open, pos);
        if (b == std::string::npos) break;
        const size_t content = b + open.size();
        const size_t e = text.find(close, content);
        if (e == std::string::npos) break;
        out.push_back(text.substr(content, e - content));
        pos = e + close.size();
    }
    return out;
}

std::string trim_copy(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

} // namespace

ParsedCandidates parse_new_candidates(const std::string& completion, int expected, TaskKind kind,
                                      bool flexible_template,
                                      const std::vector<std::string>& history_normalized) {
    if (expected < 1) throw std::invalid_argument("parse_new_candidates: expected must be >= 1");
    ParsedCandidates out;
    std::set<std::string> seen(history_normalized.begin(), history_normalized.end());

    for (const auto& raw : extract_all_spans(completion, "instruction")) {
        const std::string text = trim_copy(raw);
        if (text.empty() || text == "?") {   // the io-example marker is not a candidate
            ++out.invalid;
            continue;
        }
        bool ok;
        if (flexible_template) {
            ok = validate_template(text, kind).ok();
        } else {
            // fixed layout / suffix: plain instruction text, no placeholders
            ok = text.find("INSERT_") == std::string::npos;
        }
        if (!ok) {
            ++out.invalid;
            continue;
        }
        const std::string norm = normalize_whitespace(text);
        if (!seen.insert(norm).second) {
            ++out.duplicates;
            continue;
        }
        out.valid.push_back(text);
        if (static_cast<int>(out.valid.size()) == expected) break;
    }
    return out;
}

} // namespace crispo
