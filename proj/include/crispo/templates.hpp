#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace crispo {

enum class TaskKind { summarization, qa };

std::string to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string& s);

enum class Placeholder { input, examples, context, question };

// Placeholder literals are part of the persisted prompt format; they must
// match these strings exactly.
inline constexpr std::string_view kInputPlaceholder = "INSERT_INPUT_HERE";
inline constexpr std::string_view kExamplesPlaceholder = "INSERT_EXAMPLES_HERE";
inline constexpr std::string_view kContextPlaceholder = "INSERT_CONTEXT_HERE";
inline constexpr std::string_view kQuestionPlaceholder = "INSERT_QUESTION_HERE";

std::string_view placeholder_literal(Placeholder p);

struct PromptTemplate {
    std::string text;
    std::set<Placeholder> placeholders;
    std::string answer_tag;   // "summary" or "answer"
    TaskKind task_kind = TaskKind::summarization;

    bool has(Placeholder p) const { return placeholders.count(p) > 0; }
};

struct TemplateValidation {
    std::optional<PromptTemplate> tmpl;
    std::vector<std::string> violations;
    bool ok() const { return tmpl.has_value(); }
};

// Purely lexical placeholder detection. Summarization requires INPUT exactly
// once; QA requires QUESTION exactly once. EXAMPLES and CONTEXT are optional
// but may not repeat. Unknown INSERT_*_HERE tokens are violations.
TemplateValidation validate_template(std::string_view text, TaskKind kind);

// Literal substitution. examples/context blocks must be supplied iff the
// template declares the placeholder.
std::string render_template(const PromptTemplate& t, std::string_view input,
                            const std::optional<std::string>& examples_block = std::nullopt,
                            const std::optional<std::string>& context_block = std::nullopt);

struct TaggedExtract {
    std::string text;
    bool tagged = false;   // false: no <tag>...</tag> span, whole completion returned
};

// Content of the first <tag>...</tag> span, trimmed; falls back to the whole
// completion (trimmed) when the span is absent.
TaggedExtract extract_tagged(std::string_view completion, std::string_view tag);

// XML-style few-shot block: one <example> stanza per (input, reference) pair,
// wrapped in <examples> tags. Throws on an empty list.
std::string format_examples(const std::vector<std::pair<std::string, std::string>>& pairs,
                            TaskKind kind);

// Occurrences of `token` in `text` (non-overlapping).
int count_occurrences(std::string_view text, std::string_view token);

// Whitespace-normalized copy used for duplicate-candidate detection.
std::string normalize_whitespace(std::string_view text);

} // namespace crispo
