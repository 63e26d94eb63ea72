#include "crispo/critique.hpp"

#include <doctest.h>

#include <set>

using namespace crispo;

TEST_CASE("sample_critique_examples: distinct, reproducible, bounded") {
    Rng a(5), b(5);
    const auto first = sample_critique_examples(50, 10, a);
    const auto second = sample_critique_examples(50, 10, b);
    CHECK(first == second);   // same seed, same selection
    CHECK(first.size() == 10);
    CHECK(std::set<size_t>(first.begin(), first.end()).size() == 10);
    for (size_t i : first) CHECK(i < 50);

    Rng c(9);
    const auto whole = sample_critique_examples(6, 6, c);
    CHECK(std::set<size_t>(whole.begin(), whole.end()).size() == 6);

    Rng d(1);
    CHECK_THROWS_AS(sample_critique_examples(4, 5, d), ConfigError);
}

TEST_CASE("critique prompt structure per variant") {
    std::vector<CritiqueExampleRow> batch = {{"in1", "pred1", "ref1", ""},
                                             {"in2", "pred2", "ref2", ""}};
    const std::string instruction = "Summarize INSERT_INPUT_HERE briefly";

    const std::string free_text =
        build_critique_prompt(instruction, batch, CritiqueVariant::free_aspects(),
                              TaskKind::summarization, PromptFamily::claude);
    CHECK(count_occurrences(free_text, "<example>") == 2);
    CHECK(count_occurrences(free_text, instruction) == 1);
    CHECK(free_text.find("1. Come up with several dimensions") != std::string::npos);
    CHECK(free_text.find("4. Suggest specific action items") != std::string::npos);

    const std::string no_aspect =
        build_critique_prompt(instruction, batch, CritiqueVariant::no_aspects(),
                              TaskKind::summarization, PromptFamily::claude);
    CHECK(no_aspect.find("Come up with several dimensions") == std::string::npos);
    CHECK(no_aspect.find("Suggest specific action items") != std::string::npos);

    const std::string predefined =
        build_critique_prompt(instruction, batch, CritiqueVariant::predefined_default(),
                              TaskKind::summarization, PromptFamily::claude);
    CHECK(predefined.find("Come up with several dimensions") == std::string::npos);
    CHECK(predefined.find("- Verbosity and length: compare the level of details") !=
          std::string::npos);
    CHECK(predefined.find("- Style: compare the formatting, formality, word choices") !=
          std::string::npos);

    CHECK_THROWS_AS(CritiqueVariant::predefined({}), ConfigError);
    CHECK_THROWS_AS(build_critique_prompt(instruction, {}, CritiqueVariant::free_aspects(),
                                          TaskKind::summarization, PromptFamily::claude),
                    std::invalid_argument);
}

TEST_CASE("qa critique prompt uses generated/gold answer stanzas") {
    std::vector<CritiqueExampleRow> batch = {{"who?", "him", "her", "ctx passage"}};
    const std::string text =
        build_critique_prompt("Answer INSERT_QUESTION_HERE", batch,
                              CritiqueVariant::free_aspects(), TaskKind::qa,
                              PromptFamily::claude);
    CHECK(text.find("<generated_answer>\nhim\n</generated_answer>") != std::string::npos);
    CHECK(text.find("<gold_answer>\nher\n</gold_answer>") != std::string::npos);
    CHECK(text.find("ctx passage") != std::string::npos);
    CHECK(text.find("generated answer are the same as gold answer") != std::string::npos);
}

TEST_CASE("critique prompt is deterministic") {
    std::vector<CritiqueExampleRow> batch = {{"a", "b", "c", ""}};
    const auto one = build_critique_prompt("X INSERT_INPUT_HERE", batch,
                                           CritiqueVariant::free_aspects(),
                                           TaskKind::summarization, PromptFamily::claude);
    const auto two = build_critique_prompt("X INSERT_INPUT_HERE", batch,
                                           CritiqueVariant::free_aspects(),
                                           TaskKind::summarization, PromptFamily::claude);
    CHECK(one == two);
}

TEST_CASE("parse_critique: tagged bullet list") {
    const auto r = parse_critique("<critique>- Number of words: too long</critique>");
    CHECK(r.parse_mode() == "structured");
    REQUIRE(r.aspects.size() == 1);
    CHECK(r.aspects[0].name == "Number of words");
    CHECK(r.aspects[0].critique == "too long");
    CHECK(r.critique_text == "- Number of words: too long");
}

TEST_CASE("parse_critique: untagged completion degrades to raw") {
    const auto r = parse_critique("the outputs look fine overall");
    CHECK(r.parse_mode() == "raw");
    CHECK(r.aspects.empty());
    CHECK(r.raw_text == "the outputs look fine overall");
    CHECK(r.trajectory_text() == "the outputs look fine overall");
}

TEST_CASE("parse_critique: the worked four-aspect transcript") {
    const std::string completion =
        "<critique>- Number of words: The predicted summaries tended to be longer with more "
        "details while the reference summaries were shorter and more concise.\n"
        "- Number of sentences: The predicted summaries used more sentences to describe the "
        "inputs while the reference summaries were more succinct with fewer sentences.\n"
        "- Precision: Some details in the predicted summaries were not important and not "
        "mentioned in the reference summaries.\n"
        "- Recall: Some key details highlighted in the reference summaries were missing from "
        "the predicted summaries.\n"
        "Suggestions:\n"
        "- Specifying the expected length of the summary (e.g. 1-2 sentences)\n"
        "- Emphasizing to only include the most important/key details\n"
        "- Indicating which details should be prioritized or omitted\n"
        "</critique>";
    const auto r = parse_critique(completion);
    REQUIRE(r.aspects.size() == 4);
    CHECK(r.aspects[0].name == "Number of words");
    CHECK(r.aspects[1].name == "Number of sentences");
    CHECK(r.aspects[2].name == "Precision");
    CHECK(r.aspects[3].name == "Recall");
    CHECK(r.aspects[0].suggestion ==
          "Specifying the expected length of the summary (e.g. 1-2 sentences)");
    // raw text always preserved verbatim
    CHECK(r.raw_text == completion);
}

TEST_CASE("ast clause restricts the critique to the suffix") {
    std::vector<CritiqueExampleRow> batch = {{"a", "b", "c", ""}};
    AstCritiqueContext ast{"Be faithful."};
    const auto text = build_critique_prompt("MAIN INSERT_INPUT_HERE\nBe faithful.", batch,
                                            CritiqueVariant::free_aspects(),
                                            TaskKind::summarization, PromptFamily::claude, ast);
    CHECK(text.find("<suffix>\nBe faithful.\n</suffix>") != std::string::npos);
    CHECK(text.find("suggest edits for the suffix only") != std::string::npos);
}
