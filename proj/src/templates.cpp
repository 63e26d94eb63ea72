#include "crispo/templates.hpp"

#include <array>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace crispo {

std::string to_string(TaskKind k) {
    return k == TaskKind::summarization ? "summarization" : "qa";
}

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "summarization") return TaskKind::summarization;
    if (s == "qa") return TaskKind::qa;
    throw std::invalid_argument("unknown task kind: " + s);
}

std::string_view placeholder_literal(Placeholder p) {
    switch (p) {
        case Placeholder::input: return kInputPlaceholder;
        case Placeholder::examples: return kExamplesPlaceholder;
        case Placeholder::context: return kContextPlaceholder;
        case Placeholder::question: return kQuestionPlaceholder;
    }
    throw std::logic_error("unreachable placeholder");
}

int count_occurrences(std::string_view text, std::string_view token) {
    if (token.empty()) return 0;
    int n = 0;
    size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string_view::npos) {
        ++n;
        pos += token.size();
    }
    return n;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    bool in_ws = true;   // leading whitespace dropped
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            in_ws = true;
        } else {
            if (in_ws && !out.empty()) out.push_back(' ');
            out.push_back(ch);
            in_ws = false;
        }
    }
    return out;
}

namespace {

constexpr std::array<Placeholder, 4> kAllPlaceholders = {
    Placeholder::input, Placeholder::examples, Placeholder::context, Placeholder::question};

// All INSERT_*_HERE-shaped tokens in the text, for unknown-placeholder checks.
std::vector<std::string> placeholder_shaped_tokens(std::string_view text) {
    std::vector<std::string> out;
    size_t pos = 0;
    while ((pos = text.find("INSERT_", pos)) != std::string_view::npos) {
        size_t end = pos + 7;
        while (end < text.size() &&
               (std::isupper(static_cast<unsigned char>(text[end])) || text[end] == '_'))
            ++end;
        std::string token(text.substr(pos, end - pos));
        // trim to the last "_HERE" inside the run, if any
        size_t here = token.rfind("_HERE");
        if (here != std::string::npos) {
            token = token.substr(0, here + 5);
            out.push_back(token);
            pos += here + 5;
        } else {
            pos = end;
        }
    }
    return out;
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
    size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

// Replace a placeholder, preferring its angle-bracketed form so that
// "<INSERT_INPUT_HERE>" does not leave stray brackets around the value.
std::string substitute(std::string text, Placeholder p, std::string_view value) {
    const std::string bare(placeholder_literal(p));
    const std::string bracketed = "<" + bare + ">";
    if (text.find(bracketed) != std::string::npos)
        text = replace_all(std::move(text), bracketed, value);
    return replace_all(std::move(text), bare, value);
}

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

} // namespace

TemplateValidation validate_template(std::string_view text, TaskKind kind) {
    TemplateValidation result;
    PromptTemplate t;
    t.text = std::string(text);
    t.task_kind = kind;
    t.answer_tag = kind == TaskKind::summarization ? "summary" : "answer";

    const Placeholder required =
        kind == TaskKind::summarization ? Placeholder::input : Placeholder::question;
    const Placeholder disallowed =
        kind == TaskKind::summarization ? Placeholder::question : Placeholder::input;

    for (Placeholder p : kAllPlaceholders) {
        const int n = count_occurrences(text, placeholder_literal(p));
        if (n == 0) continue;
        if (p == disallowed) {
            result.violations.push_back("placeholder " + std::string(placeholder_literal(p)) +
                                        " is not allowed for " + to_string(kind) + " tasks");
            continue;
        }
        if (n > 1) {
            result.violations.push_back("duplicate placeholder " +
                                        std::string(placeholder_literal(p)));
        }
        t.placeholders.insert(p);
    }
    if (count_occurrences(text, placeholder_literal(required)) == 0) {
        result.violations.push_back("missing required placeholder " +
                                    std::string(placeholder_literal(required)));
    }
    for (const auto& token : placeholder_shaped_tokens(text)) {
        bool known = false;
        for (Placeholder p : kAllPlaceholders)
            if (token == placeholder_literal(p)) known = true;
        if (!known)
            result.violations.push_back("unknown placeholder " + token);
    }

    if (result.violations.empty()) result.tmpl = std::move(t);
    return result;
}

std::string render_template(const PromptTemplate& t, std::string_view input,
                            const std::optional<std::string>& examples_block,
                            const std::optional<std::string>& context_block) {
    if (t.has(Placeholder::examples) != examples_block.has_value())
        throw std::logic_error("render: examples block must be supplied iff declared");
    if (t.has(Placeholder::context) != context_block.has_value())
        throw std::logic_error("render: context block must be supplied iff declared");

    std::string out = t.text;
    const Placeholder slot =
        t.task_kind == TaskKind::summarization ? Placeholder::input : Placeholder::question;
    out = substitute(std::move(out), slot, input);
    if (examples_block) out = substitute(std::move(out), Placeholder::examples, *examples_block);
    if (context_block) out = substitute(std::move(out), Placeholder::context, *context_block);
    return out;
}

TaggedExtract extract_tagged(std::string_view completion, std::string_view tag) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    const size_t b = completion.find(open);
    if (b != std::string_view::npos) {
        const size_t content = b + open.size();
        const size_t e = completion.find(close, content);
        if (e != std::string_view::npos) {
            return {trim(completion.substr(content, e - content)), true};
        }
    }
    return {trim(completion), false};
}

std::string format_examples(const std::vector<std::pair<std::string, std::string>>& pairs,
                            TaskKind kind) {
    if (pairs.empty()) throw std::invalid_argument("format_examples: empty list");
    const char* input_tag = kind == TaskKind::summarization ? "input" : "question";
    const char* output_tag = kind == TaskKind::summarization ? "summary" : "answer";
    std::ostringstream ss;
    ss << "<examples>\n";
    for (const auto& [x, y] : pairs) {
        ss << "<example>\n";
        ss << "<" << input_tag << ">\n" << x << "\n</" << input_tag << ">\n";
        ss << "<" << output_tag << ">\n" << y << "\n</" << output_tag << ">\n";
        ss << "</example>\n";
    }
    ss << "</examples>";
    return ss.str();
}

} // namespace crispo
