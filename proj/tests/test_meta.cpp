#include "crispo/meta_prompts.hpp"

#include "crispo/critique.hpp"
#include "crispo/optimizer.hpp"
#include "crispo/store.hpp"

#include <doctest.h>

using namespace crispo;

namespace {

std::string resource_file(const std::string& name) {
    return read_file(std::string(CRISPO_SOURCE_DIR) + "/resources/meta_prompts/" + name);
}

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
    const size_t pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, from.size(), to);
    return text;
}

std::string replace_all_str(std::string text, const std::string& from, const std::string& to) {
    size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

} // namespace

TEST_CASE("embedded meta-prompt texts match the resource files byte-for-byte") {
    CHECK(critique_resource(TaskKind::summarization, PromptFamily::claude) ==
          resource_file("critique_summarization_claude.txt"));
    CHECK(critique_resource(TaskKind::summarization, PromptFamily::mistral) ==
          resource_file("critique_summarization_mistral.txt"));
    CHECK(critique_resource(TaskKind::qa, PromptFamily::claude) ==
          resource_file("critique_qa_claude.txt"));
    CHECK(optimizer_resource(TaskKind::summarization, PromptFamily::claude) ==
          resource_file("optimizer_summarization_claude.txt"));
    CHECK(optimizer_resource(TaskKind::summarization, PromptFamily::mistral) ==
          resource_file("optimizer_summarization_mistral.txt"));
    CHECK(optimizer_resource(TaskKind::qa, PromptFamily::claude) ==
          resource_file("optimizer_qa_claude.txt"));
}

TEST_CASE("rendered critique prompt equals the expanded resource text") {
    // Independent expansion: string surgery on the resource file only.
    const std::string resource = resource_file("critique_summarization_claude.txt");
    const std::string stanza =
        "<example>\n<input>\n{document}\n</input>\n<predicted_summary>\n{predicted_summary}\n"
        "</predicted_summary>\n<reference_summary>\n{reference_summary}\n</reference_summary>\n"
        "</example>";

    std::vector<CritiqueExampleRow> batch = {
        {"DOC-A", "PRED-A", "REF-A", ""},
        {"DOC-B", "PRED-B", "REF-B", ""},
    };
    auto fill = [&](const std::string& d, const std::string& p, const std::string& r) {
        std::string s = replace_all_str(stanza, "{document}", d);
        s = replace_all_str(s, "{predicted_summary}", p);
        return replace_all_str(s, "{reference_summary}", r);
    };
    std::string expected = replace_once(resource, stanza + "\n...",
                                        fill("DOC-A", "PRED-A", "REF-A") + "\n" +
                                            fill("DOC-B", "PRED-B", "REF-B"));
    expected = replace_once(expected, "{instruction}", "MY-INSTRUCTION");

    const std::string got =
        build_critique_prompt("MY-INSTRUCTION", batch, CritiqueVariant::free_aspects(),
                              TaskKind::summarization, PromptFamily::claude);
    CHECK(got == expected);
}

TEST_CASE("rendered optimizer prompt equals the expanded resource text") {
    const std::string resource = resource_file("optimizer_summarization_claude.txt");
    const std::string io_stanza =
        "<example>\n<instruction>?</instruction>\n<input>\n{article}\n</input>\n<summary>\n"
        "{summary}\n</summary>\n</example>";
    const std::string rated_stanza =
        "<rated_instruction>\n<instruction>{instruction}</instruction>\n<score>{score}</score>\n"
        "<critique>\n{critique}\n</critique>\n</rated_instruction>";

    std::string expected = replace_once(resource, io_stanza + "\n...",
                                        replace_all_str(replace_all_str(io_stanza, "{article}",
                                                                        "ART-1"),
                                                        "{summary}", "SUM-1"));
    auto rated = [&](const std::string& i, const std::string& s, const std::string& c) {
        std::string out = replace_all_str(rated_stanza, "{instruction}", i);
        out = replace_all_str(out, "{score}", s);
        return replace_all_str(out, "{critique}", c);
    };
    expected = replace_once(expected, rated_stanza + "\n...",
                            rated("WORSE", "40.0", "CRIT-1") + "\n" +
                                rated("BETTER", "60.0", "CRIT-2"));

    std::vector<TrajectoryEntry> elite = {
        {"c1", "WORSE", 0.40, "CRIT-1", 1},
        {"c2", "BETTER", 0.60, "CRIT-2", 2},
    };
    OptimizerPromptSpec spec;   // defaults: claude, summarization, all flags on
    const std::string got =
        build_optimizer_prompt(elite, {{"ART-1", "SUM-1", ""}}, spec);
    CHECK(got == expected);
}

TEST_CASE("mistral optimizer prompt keeps its placeholder constraint steps") {
    std::vector<TrajectoryEntry> elite = {{"c1", "TXT", 0.5, "CRIT", 1}};
    OptimizerPromptSpec spec;
    spec.family = PromptFamily::mistral;
    const std::string got = build_optimizer_prompt(elite, {{"A", "S", ""}}, spec);
    CHECK(got.find("5. In your final prompt, you must use <INSERT_INPUT_HERE> only once") !=
          std::string::npos);
    CHECK(got.find("6. In your final prompt, you must use <INSERT_EXAMPLES_HERE> only once") !=
          std::string::npos);
    CHECK(got.find("EXAMPLE 1\nINPUT:\nA\nTARGET_SUMMARY:\nS") != std::string::npos);
}

TEST_CASE("qa optimizer prompt fills the placeholder-name slots") {
    std::vector<TrajectoryEntry> elite = {{"c1", "TXT INSERT_QUESTION_HERE", 0.5, "CRIT", 1}};
    OptimizerPromptSpec spec;
    spec.kind = TaskKind::qa;
    const std::string got = build_optimizer_prompt(elite, {{"Q1", "A1", "CTX1"}}, spec);
    CHECK(got.find("\"INSERT_QUESTION_HERE\", \"INSERT_CONTEXT_HERE\"") != std::string::npos);
    CHECK(got.find("{question_placeholder}") == std::string::npos);
    CHECK(got.find("<question>\nQ1\n</question>\nCTX1\n<answer>\nA1\n</answer>") !=
          std::string::npos);
}
