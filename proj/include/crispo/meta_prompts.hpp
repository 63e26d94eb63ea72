#pragma once

#include "crispo/templates.hpp"

#include <functional>
#include <string>

namespace crispo {

// Meta-prompt wording differs per provider family (tag-based for Claude-like
// models, plain headings for Mistral-like ones).
enum class PromptFamily { claude, mistral };

std::string to_string(PromptFamily f);
PromptFamily prompt_family_from_string(const std::string& s);

// Verbatim meta-prompt templates, identical to the checked-in files under
// resources/meta_prompts/ (a unit test enforces the byte equality). The "..."
// line marks the repeatable stanza; {slot} markers are interpolation points.
const std::string& critique_resource(TaskKind kind, PromptFamily family);
const std::string& optimizer_resource(TaskKind kind, PromptFamily family);

namespace meta {

// Building blocks the prompt builders assemble; the resource texts above are
// assembled from these same constants.
struct CritiqueParts {
    std::string header;
    std::string instruction_block;     // contains {instruction}
    std::string examples_open;         // "" when the family has no wrapper tag
    std::string example_stanza;        // contains per-example slots
    std::string examples_close;
    std::string request;               // "Write a general and helpful critique ..."
    std::string directive_dimensions;  // numbered item 1
    std::string directive_differences; // numbered item 2
    std::string directive_phrases;     // numbered item 3
    std::string directive_actions;     // numbered item 4
};

struct OptimizerParts {
    std::string header;
    std::string examples_intro;        // "Below are some examples:"
    std::string io_stanza;             // instruction slot fixed to "?"
    std::string trajectory_intro_with_critiques;
    std::string trajectory_intro_scores_only;
    std::string rated_stanza_with_critique;
    std::string rated_stanza_scores_only;
    std::string generate_directive;    // two-line couplet
    std::string cot_intro;             // "Draft your new instruction step by step:"
    std::string cot_compare;           // step 1
    std::string cot_apply;             // step 2
    std::string cot_vary_flexible;     // step 3, placeholder wording
    std::string cot_vary_fixed;        // step 3 without placeholder wording
    std::string cot_write;             // step 4
    std::string write_instruction;     // unnumbered closing when CoT is off
    std::vector<std::string> placeholder_constraints;   // mistral steps 5-6
};

const CritiqueParts& critique_parts(TaskKind kind, PromptFamily family);
const OptimizerParts& optimizer_parts(TaskKind kind, PromptFamily family);

// Replaces every "{slot}" occurrence.
std::string fill_slot(std::string text, std::string_view slot, std::string_view value);

// Repeats a stanza once per instance ({id} gets the 1-based index), joined
// with newlines — the expansion of "stanza\n..." in the resource texts.
std::string expand_stanzas(const std::string& stanza, size_t count,
                           const std::function<std::string(std::string, size_t)>& fill_one);

} // namespace meta

} // namespace crispo
