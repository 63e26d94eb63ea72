#include "crispo/critique.hpp"

#include "crispo/errors.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace crispo {

CritiqueVariant CritiqueVariant::no_aspects() {
    CritiqueVariant v;
    v.kind = Kind::no_aspect;
    return v;
}

CritiqueVariant CritiqueVariant::predefined(std::vector<AspectDef> aspects) {
    if (aspects.empty())
        throw ConfigError("predefined critique variant needs a nonempty aspect list");
    CritiqueVariant v;
    v.kind = Kind::predefined_aspects;
    v.aspects = std::move(aspects);
    return v;
}

CritiqueVariant CritiqueVariant::predefined_default() {
    return predefined({
        {"Verbosity and length",
         "compare the level of details and the length between prediction and reference summaries"},
        {"Comprehensiveness",
         "compare whether the prediction covers all the information from the reference summaries"},
        {"Precision",
         "compare whether the information from the prediction summaries are present in the "
         "reference summaries."},
        {"Style", "compare the formatting, formality, word choices, sentence structures etc."},
    });
}

std::string to_string(CritiqueVariant::Kind k) {
    switch (k) {
        case CritiqueVariant::Kind::multi_aspect_free: return "multi_aspect_free";
        case CritiqueVariant::Kind::no_aspect: return "no_aspect";
        case CritiqueVariant::Kind::predefined_aspects: return "predefined_aspects";
    }
    throw std::logic_error("unreachable critique variant");
}

CritiqueVariant::Kind critique_variant_kind_from_string(const std::string& s) {
    if (s == "multi_aspect_free") return CritiqueVariant::Kind::multi_aspect_free;
    if (s == "no_aspect") return CritiqueVariant::Kind::no_aspect;
    if (s == "predefined_aspects") return CritiqueVariant::Kind::predefined_aspects;
    throw ConfigError("unknown critique variant: " + s);
}

std::vector<size_t> sample_critique_examples(size_t train_size, size_t n, Rng& rng) {
    if (n > train_size)
        throw ConfigError("critique batch size " + std::to_string(n) +
                          " exceeds train split size " + std::to_string(train_size));
    return rng.sample_indices(train_size, n);
}

std::string build_critique_prompt(const std::string& instruction_text,
                                  const std::vector<CritiqueExampleRow>& batch,
                                  const CritiqueVariant& variant, TaskKind kind,
                                  PromptFamily family,
                                  const std::optional<AstCritiqueContext>& ast) {
    if (batch.empty()) throw std::invalid_argument("build_critique_prompt: empty batch");
    const meta::CritiqueParts& parts = meta::critique_parts(kind, family);

    std::string out = parts.header + "\n\n";
    out += meta::fill_slot(parts.instruction_block, "instruction", instruction_text) + "\n";
    if (!parts.examples_open.empty()) out += parts.examples_open + "\n";
    out += meta::expand_stanzas(parts.example_stanza, batch.size(),
                                [&](std::string stanza, size_t i) {
                                    const CritiqueExampleRow& row = batch[i];
                                    if (kind == TaskKind::summarization) {
                                        stanza = meta::fill_slot(stanza, "document", row.input);
                                        stanza = meta::fill_slot(stanza, "predicted_summary",
                                                                 row.prediction);
                                        stanza = meta::fill_slot(stanza, "reference_summary",
                                                                 row.reference);
                                    } else {
                                        stanza = meta::fill_slot(stanza, "question", row.input);
                                        stanza = meta::fill_slot(stanza, "context", row.context);
                                        stanza = meta::fill_slot(stanza, "generated_answer",
                                                                 row.prediction);
                                        stanza = meta::fill_slot(stanza, "gold_answer",
                                                                 row.reference);
                                    }
                                    return stanza;
                                });
    out += "\n";
    if (!parts.examples_close.empty()) out += parts.examples_close + "\n";
    out += "\n" + parts.request + "\n\n";

    switch (variant.kind) {
        case CritiqueVariant::Kind::multi_aspect_free:
            out += parts.directive_dimensions + "\n" + parts.directive_differences + "\n" +
                   parts.directive_phrases + "\n" + parts.directive_actions + "\n";
            break;
        case CritiqueVariant::Kind::no_aspect:
            // Compare in general; no dimension discovery requested.
            out += "1. Compare the predicted outputs and references in general.\n";
            out += "2. " + parts.directive_actions.substr(3) + "\n";
            break;
        case CritiqueVariant::Kind::predefined_aspects: {
            out += "1. Compare its predicted outputs and references on the following dimensions:\n";
            for (const auto& a : variant.aspects)
                out += "- " + a.name + ": " + a.definition + "\n";
            out += parts.directive_differences + "\n" + parts.directive_phrases + "\n" +
                   parts.directive_actions + "\n";
            break;
        }
    }

    if (ast) {
        out += "\nThe instruction ends with a suffix postscript shown below. Critique and "
               "suggest edits for the suffix only; the rest of the instruction is fixed.\n"
               "<suffix>\n" +
               ast->suffix + "\n</suffix>\n";
    }
    return out;
}

namespace {

std::string trim_copy(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool is_bullet(const std::string& line) {
    const std::string t = trim_copy(line);
    return t.size() > 1 && (t[0] == '-' || t[0] == '*');
}

// "- Name: text" -> (Name, text); names longer than a few words are treated
// as unlabeled critique lines.
std::optional<std::pair<std::string, std::string>> split_aspect_bullet(const std::string& line) {
    std::string t = trim_copy(line);
    t = trim_copy(t.substr(1));   // drop the bullet marker
    const size_t colon = t.find(':');
    if (colon == std::string::npos || colon == 0) return std::nullopt;
    const std::string name = trim_copy(t.substr(0, colon));
    if (std::count(name.begin(), name.end(), ' ') > 5) return std::nullopt;
    return std::make_pair(name, trim_copy(t.substr(colon + 1)));
}

} // namespace

CritiqueReport parse_critique(const std::string& completion) {
    CritiqueReport report;
    report.raw_text = completion;

    const TaggedExtract span = extract_tagged(completion, "critique");
    report.tagged = span.tagged;
    report.critique_text = span.text;

    // Aspect bullets come from the critique span; suggestion bullets from an
    // action-item block (a <suggestion> span or lines after a "suggestion"
    // heading) are attached positionally.
    std::istringstream lines(span.text);
    std::string line;
    bool in_suggestions = false;
    std::vector<std::string> suggestions;
    while (std::getline(lines, line)) {
        const std::string lowered = [&] {
            std::string l = trim_copy(line);
            std::transform(l.begin(), l.end(), l.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            return l;
        }();
        if (!is_bullet(line)) {
            if (lowered.find("suggestion") != std::string::npos ||
                lowered.find("action item") != std::string::npos)
                in_suggestions = true;
            continue;
        }
        if (in_suggestions) {
            suggestions.push_back(trim_copy(trim_copy(line).substr(1)));
            continue;
        }
        if (auto aspect = split_aspect_bullet(line)) {
            report.aspects.push_back({aspect->first, aspect->second, ""});
        }
    }

    // Suggestions may also arrive in their own tagged span outside <critique>.
    if (suggestions.empty()) {
        const TaggedExtract sg = extract_tagged(completion, "suggestion");
        if (sg.tagged && !sg.text.empty()) suggestions.push_back(sg.text);
    }
    for (size_t i = 0; i < suggestions.size() && i < report.aspects.size(); ++i)
        report.aspects[i].suggestion = suggestions[i];

    return report;
}

} // namespace crispo
