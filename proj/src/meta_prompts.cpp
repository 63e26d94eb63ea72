#include "crispo/meta_prompts.hpp"

#include "crispo/errors.hpp"

#include <functional>
#include <map>

namespace crispo {

std::string to_string(PromptFamily f) {
    return f == PromptFamily::claude ? "claude" : "mistral";
}

PromptFamily prompt_family_from_string(const std::string& s) {
    if (s == "claude") return PromptFamily::claude;
    if (s == "mistral") return PromptFamily::mistral;
    throw ConfigError("unknown prompt family: " + s);
}

namespace meta {

std::string fill_slot(std::string text, std::string_view slot, std::string_view value) {
    const std::string marker = "{" + std::string(slot) + "}";
    size_t pos = 0;
    while ((pos = text.find(marker, pos)) != std::string::npos) {
        text.replace(pos, marker.size(), value);
        pos += value.size();
    }
    return text;
}

std::string expand_stanzas(const std::string& stanza, size_t count,
                           const std::function<std::string(std::string, size_t)>& fill_one) {
    std::string out;
    for (size_t i = 0; i < count; ++i) {
        if (i) out.push_back('\n');
        std::string one = fill_slot(stanza, "id", std::to_string(i + 1));
        out += fill_one(std::move(one), i);
    }
    return out;
}

namespace {

CritiqueParts make_critique_claude_summarization() {
    CritiqueParts p;
    p.header =
        "In a summarization task, a writer is given an input text to write a summary "
        "following an instruction.";
    p.instruction_block = "<instruction>{instruction}</instruction>";
    p.examples_open = "<examples>";
    p.example_stanza =
        "<example>\n<input>\n{document}\n</input>\n<predicted_summary>\n{predicted_summary}\n"
        "</predicted_summary>\n<reference_summary>\n{reference_summary}\n</reference_summary>\n"
        "</example>";
    p.examples_close = "</examples>";
    p.request =
        "Write a general and helpful critique in <critique> XML tags to improve the "
        "instruction such that the predicted summaries are as close to references as possible.";
    p.directive_dimensions =
        "1. Come up with several dimensions to compare its predicted summaries and reference "
        "summaries, e.g., number of words, number of sentences, style, precision, recall, etc.";
    p.directive_differences =
        "2. List the difference predicted summaries and references on each dimension.";
    p.directive_phrases =
        "3. Identify specific phrases in the instruction that could have gotten these predicted "
        "summaries different with references on each dimension.";
    p.directive_actions =
        "4. Suggest specific action items that are general to all examples and helpful to "
        "improve the instruction.";
    return p;
}

CritiqueParts make_critique_mistral_summarization() {
    CritiqueParts p = make_critique_claude_summarization();
    p.instruction_block = "INSTRUCTION: \n{instruction}";
    p.examples_open = "Here are a few examples using the instruction. ";
    p.example_stanza =
        "EXAMPLE {id}\nINPUT:\n{document}\nPREDICTED_SUMMARY:\n{predicted_summary}\n"
        "REFERENCE_SUMMARY:\n{reference_summary}";
    p.examples_close = "";
    p.request =
        "Write a general and helpful critique to improve the instruction such that the "
        "predicted summaries are as close to references as possible.";
    return p;
}

CritiqueParts make_critique_claude_qa() {
    CritiqueParts p;
    p.header =
        "In a question-answering task, question and context are provided and the answer needs "
        "to be generated.";
    p.instruction_block = "<instruction>{instruction}</instruction>";
    p.examples_open = "<examples>";
    p.example_stanza =
        "<example>\n<question>\n{question}\n</question>\n{context}\n<generated_answer>\n"
        "{generated_answer}\n</generated_answer>\n<gold_answer>\n{gold_answer}\n</gold_answer>\n"
        "</example>";
    p.examples_close = "</examples>";
    p.request =
        "Write a general and helpful critique in <critique> XML tags to improve the "
        "instruction such that the generated answer are the same as gold answer.";
    p.directive_dimensions =
        "1. Come up with several dimensions to compare its generated and gold answer, e.g., "
        "number of words, style, precision, recall, etc.";
    p.directive_differences =
        "2. List the difference between generated and gold answer on each dimension.";
    p.directive_phrases =
        "3. Identify specific phrases in the instruction that could have gotten these generated "
        "answer different with gold one on each dimension.";
    p.directive_actions =
        "4. Suggest specific action items that are general to all examples and helpful to "
        "improve the instruction.";
    return p;
}

OptimizerParts make_optimizer_claude_summarization() {
    OptimizerParts p;
    p.header =
        "Your task is to optimize the instruction for a summarization task, where a writer is "
        "given an input text to write its summary following your instruction.";
    p.examples_intro = "Below are some examples:";
    p.io_stanza =
        "<example>\n<instruction>?</instruction>\n<input>\n{article}\n</input>\n<summary>\n"
        "{summary}\n</summary>\n</example>";
    p.trajectory_intro_with_critiques =
        "Below are some previous instructions with their scores and critiques.";
    p.trajectory_intro_scores_only = "Below are some previous instructions with their scores.";
    p.rated_stanza_with_critique =
        "<rated_instruction>\n<instruction>{instruction}</instruction>\n<score>{score}</score>\n"
        "<critique>\n{critique}\n</critique>\n</rated_instruction>";
    p.rated_stanza_scores_only =
        "<rated_instruction>\n<instruction>{instruction}</instruction>\n<score>{score}</score>\n"
        "</rated_instruction>";
    p.generate_directive =
        "Generate an instruction that is different from all the instructions above, and has a "
        "higher score than all the instructions above.\nIt should be concise, effective, and "
        "generally applicable to all examples above.";
    p.cot_intro = "Draft your new instruction step by step:";
    p.cot_compare =
        "1. Compare high-score instructions to low-score ones, identify what suggestions could "
        "have improved them. List them in <suggestion> tags.";
    p.cot_apply = "2. Apply the suggestions and draft a new instruction aiming for a higher score.";
    p.cot_vary_flexible =
        "3. Be creative and vary the wording, paraphrase, position of INSERT_INPUT_HERE and "
        "INSERT_EXAMPLES_HERE, phrase order, grammar, sentence order and etc.";
    p.cot_vary_fixed =
        "3. Be creative and vary the wording, paraphrase, phrase order, grammar, sentence order "
        "and etc.";
    p.cot_write = "4. Write your final new instruction in <instruction> tags.";
    p.write_instruction = "Write your final new instruction in <instruction> tags.";
    return p;
}

OptimizerParts make_optimizer_mistral_summarization() {
    OptimizerParts p = make_optimizer_claude_summarization();
    p.io_stanza = "EXAMPLE {id}\nINPUT:\n{article}\nTARGET_SUMMARY:\n{summary}";
    p.rated_stanza_with_critique =
        "INSTRUCTION:\n{instruction}\nSCORE:\n{score}\nCRITIQUE:\n{critique}";
    p.rated_stanza_scores_only = "INSTRUCTION:\n{instruction}\nSCORE:\n{score}";
    p.cot_compare =
        "1. Compare high-score instructions to low-score ones, identify what suggestions could "
        "have improved them. Write down your suggestions first.";
    p.cot_vary_flexible =
        "3. Be creative and vary the wording, paraphrase, position of <INSERT_INPUT_HERE> and "
        "<INSERT_EXAMPLES_HERE>, phrase order, grammar, sentence order and etc.";
    p.cot_write = "4. Write your final new instruction in <instruction></instruction> tags.";
    p.write_instruction = "Write your final new instruction in <instruction></instruction> tags.";
    p.placeholder_constraints = {
        "In your final prompt, you must use <INSERT_INPUT_HERE> only once and use it in a "
        "separate line.",
        "In your final prompt, you must use <INSERT_EXAMPLES_HERE> only once and use it in a "
        "separate line."};
    return p;
}

OptimizerParts make_optimizer_claude_qa() {
    OptimizerParts p = make_optimizer_claude_summarization();
    p.header =
        "Your task is to optimize the instruction for a question-answering task, where the "
        "question and context are provided.";
    p.io_stanza =
        "<example>\n<instruction>?</instruction>\n<question>\n{question}\n</question>\n"
        "{context}\n<answer>\n{answer}\n</answer>\n</example>";
    p.cot_vary_flexible =
        "3. Be creative and vary the wording, paraphrase, position of \"{question_placeholder}\", "
        "\"{context_placeholder}\", phrase order, grammar, sentence order, which specific "
        "examples to give, etc.";
    p.cot_vary_fixed =
        "3. Be creative and vary the wording, paraphrase, phrase order, grammar, sentence order, "
        "which specific examples to give, etc.";
    return p;
}

std::string assemble_critique_resource(const CritiqueParts& p) {
    std::string out = p.header + "\n\n" + p.instruction_block + "\n";
    if (!p.examples_open.empty()) out += p.examples_open + "\n";
    out += p.example_stanza + "\n...\n";
    if (!p.examples_close.empty()) out += p.examples_close + "\n";
    out += "\n" + p.request + "\n\n";
    out += p.directive_dimensions + "\n" + p.directive_differences + "\n" + p.directive_phrases +
           "\n" + p.directive_actions + "\n";
    return out;
}

std::string assemble_optimizer_resource(const OptimizerParts& p) {
    std::string out = p.header + "\n\n";
    out += p.examples_intro + "\n" + p.io_stanza + "\n...\n\n";
    out += p.trajectory_intro_with_critiques + "\n" + p.rated_stanza_with_critique + "\n...\n\n";
    out += p.generate_directive + "\n\n";
    out += p.cot_intro + "\n\n";
    out += p.cot_compare + "\n" + p.cot_apply + "\n" + p.cot_vary_flexible + "\n" + p.cot_write +
           "\n";
    for (size_t i = 0; i < p.placeholder_constraints.size(); ++i)
        out += std::to_string(5 + i) + ". " + p.placeholder_constraints[i] + "\n";
    return out;
}

struct Key {
    TaskKind kind;
    PromptFamily family;
    bool operator<(const Key& o) const {
        return std::tie(kind, family) < std::tie(o.kind, o.family);
    }
};

} // namespace

const CritiqueParts& critique_parts(TaskKind kind, PromptFamily family) {
    static const std::map<Key, CritiqueParts> table = {
        {{TaskKind::summarization, PromptFamily::claude}, make_critique_claude_summarization()},
        {{TaskKind::summarization, PromptFamily::mistral}, make_critique_mistral_summarization()},
        {{TaskKind::qa, PromptFamily::claude}, make_critique_claude_qa()},
    };
    auto it = table.find({kind, family});
    if (it == table.end())
        throw ConfigError("no critique meta-prompt for task " + to_string(kind) + " / family " +
                          to_string(family));
    return it->second;
}

const OptimizerParts& optimizer_parts(TaskKind kind, PromptFamily family) {
    static const std::map<Key, OptimizerParts> table = {
        {{TaskKind::summarization, PromptFamily::claude}, make_optimizer_claude_summarization()},
        {{TaskKind::summarization, PromptFamily::mistral}, make_optimizer_mistral_summarization()},
        {{TaskKind::qa, PromptFamily::claude}, make_optimizer_claude_qa()},
    };
    auto it = table.find({kind, family});
    if (it == table.end())
        throw ConfigError("no optimizer meta-prompt for task " + to_string(kind) + " / family " +
                          to_string(family));
    return it->second;
}

} // namespace meta

const std::string& critique_resource(TaskKind kind, PromptFamily family) {
    static const std::map<std::pair<int, int>, std::string> table = [] {
        std::map<std::pair<int, int>, std::string> t;
        for (TaskKind k : {TaskKind::summarization, TaskKind::qa}) {
            for (PromptFamily f : {PromptFamily::claude, PromptFamily::mistral}) {
                if (k == TaskKind::qa && f == PromptFamily::mistral) continue;
                t[{static_cast<int>(k), static_cast<int>(f)}] =
                    meta::assemble_critique_resource(meta::critique_parts(k, f));
            }
        }
        return t;
    }();
    auto it = table.find({static_cast<int>(kind), static_cast<int>(family)});
    if (it == table.end()) throw ConfigError("no critique meta-prompt for this task/family");
    return it->second;
}

const std::string& optimizer_resource(TaskKind kind, PromptFamily family) {
    static const std::map<std::pair<int, int>, std::string> table = [] {
        std::map<std::pair<int, int>, std::string> t;
        for (TaskKind k : {TaskKind::summarization, TaskKind::qa}) {
            for (PromptFamily f : {PromptFamily::claude, PromptFamily::mistral}) {
                if (k == TaskKind::qa && f == PromptFamily::mistral) continue;
                t[{static_cast<int>(k), static_cast<int>(f)}] =
                    meta::assemble_optimizer_resource(meta::optimizer_parts(k, f));
            }
        }
        return t;
    }();
    auto it = table.find({static_cast<int>(kind), static_cast<int>(family)});
    if (it == table.end()) throw ConfigError("no optimizer meta-prompt for this task/family");
    return it->second;
}

} // namespace crispo
