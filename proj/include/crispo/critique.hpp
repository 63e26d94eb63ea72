#pragma once

#include "crispo/meta_prompts.hpp"
#include "crispo/rng.hpp"
#include "crispo/store.hpp"

#include <optional>
#include <string>
#include <vector>

namespace crispo {

struct AspectCritique {
    std::string name;
    std::string critique;
    std::string suggestion;
};

struct CritiqueReport {
    std::string raw_text;        // full completion verbatim
    std::string critique_text;   // <critique> span when tagged, else raw_text
    bool tagged = false;
    std::vector<AspectCritique> aspects;   // best-effort parse; may be empty

    std::string parse_mode() const { return tagged ? "structured" : "raw"; }
    // Text fed into the optimizer trajectory.
    const std::string& trajectory_text() const { return critique_text; }
};

struct AspectDef {
    std::string name;
    std::string definition;
};

struct CritiqueVariant {
    enum class Kind { multi_aspect_free, no_aspect, predefined_aspects };
    Kind kind = Kind::multi_aspect_free;
    std::vector<AspectDef> aspects;   // predefined_aspects only; must be nonempty

    static CritiqueVariant free_aspects() { return {}; }
    static CritiqueVariant no_aspects();
    static CritiqueVariant predefined(std::vector<AspectDef> aspects);
    // The four predefined summarization aspects (verbosity, comprehensiveness,
    // precision, style).
    static CritiqueVariant predefined_default();
};

std::string to_string(CritiqueVariant::Kind k);
CritiqueVariant::Kind critique_variant_kind_from_string(const std::string& s);

// One record shown to the critique LLM.
struct CritiqueExampleRow {
    std::string input;        // document or question
    std::string prediction;
    std::string reference;
    std::string context;      // QA only; already formatted
};

// n distinct train examples, uniform without replacement, reproducible from
// the rng state. Throws when n exceeds the split size.
std::vector<size_t> sample_critique_examples(size_t train_size, size_t n, Rng& rng);

struct AstCritiqueContext {
    std::string suffix;       // the tunable suffix shown in the added clause
};

// Instantiates the critique-suggestion meta-prompt for one candidate.
// `instruction_text` is the candidate template (or composed prompt in AST
// mode). Batch must be nonempty.
std::string build_critique_prompt(const std::string& instruction_text,
                                  const std::vector<CritiqueExampleRow>& batch,
                                  const CritiqueVariant& variant, TaskKind kind,
                                  PromptFamily family,
                                  const std::optional<AstCritiqueContext>& ast = std::nullopt);

// Extracts the <critique> span (else whole text) and best-effort splits
// "- Aspect: text" bullets; never fails.
CritiqueReport parse_critique(const std::string& completion);

} // namespace crispo
