#include "crispo/templates.hpp"

#include "crispo/rng.hpp"

#include <doctest.h>

using namespace crispo;

TEST_CASE("validate: summarization requires INPUT exactly once") {
    auto ok = validate_template("Summarize: INSERT_INPUT_HERE", TaskKind::summarization);
    REQUIRE(ok.ok());
    CHECK(ok.tmpl->placeholders == std::set<Placeholder>{Placeholder::input});
    CHECK(ok.tmpl->answer_tag == "summary");

    auto missing = validate_template("Summarize this.", TaskKind::summarization);
    CHECK_FALSE(missing.ok());
    REQUIRE(missing.violations.size() == 1);
    CHECK(missing.violations[0] == "missing required placeholder INSERT_INPUT_HERE");

    auto dup = validate_template("INSERT_INPUT_HERE and INSERT_INPUT_HERE",
                                 TaskKind::summarization);
    CHECK_FALSE(dup.ok());
    CHECK(dup.violations[0] == "duplicate placeholder INSERT_INPUT_HERE");
}

TEST_CASE("validate: optional placeholders and unknown tokens") {
    auto ok = validate_template(
        "INSERT_EXAMPLES_HERE\nSummarize INSERT_INPUT_HERE with INSERT_CONTEXT_HERE",
        TaskKind::summarization);
    REQUIRE(ok.ok());
    CHECK(ok.tmpl->placeholders.size() == 3);

    auto unknown = validate_template("INSERT_INPUT_HERE INSERT_OUTPUT_HERE",
                                     TaskKind::summarization);
    CHECK_FALSE(unknown.ok());
    CHECK(unknown.violations[0] == "unknown placeholder INSERT_OUTPUT_HERE");

    auto dup_ex = validate_template(
        "INSERT_INPUT_HERE INSERT_EXAMPLES_HERE INSERT_EXAMPLES_HERE", TaskKind::summarization);
    CHECK_FALSE(dup_ex.ok());
}

TEST_CASE("validate: qa uses QUESTION; INPUT is rejected") {
    auto ok = validate_template("INSERT_CONTEXT_HERE\nAnswer INSERT_QUESTION_HERE",
                                TaskKind::qa);
    REQUIRE(ok.ok());
    CHECK(ok.tmpl->answer_tag == "answer");

    auto wrong = validate_template("Answer INSERT_INPUT_HERE", TaskKind::qa);
    CHECK_FALSE(wrong.ok());

    auto sum_with_q = validate_template("INSERT_INPUT_HERE INSERT_QUESTION_HERE",
                                        TaskKind::summarization);
    CHECK_FALSE(sum_with_q.ok());
}

TEST_CASE("render substitutes literally and exactly once") {
    auto t = validate_template("Summarize: INSERT_INPUT_HERE", TaskKind::summarization);
    CHECK(render_template(*t.tmpl, "hello") == "Summarize: hello");

    auto t2 = validate_template("INSERT_EXAMPLES_HERE\nGo INSERT_INPUT_HERE",
                                TaskKind::summarization);
    const std::string out = render_template(*t2.tmpl, "doc", std::string("EX-BLOCK"));
    CHECK(out == "EX-BLOCK\nGo doc");

    auto t3 = validate_template("ctx: INSERT_CONTEXT_HERE q: INSERT_QUESTION_HERE",
                                TaskKind::qa);
    CHECK(render_template(*t3.tmpl, "why?", std::nullopt, std::string("PASSAGE")) ==
          "ctx: PASSAGE q: why?");

    // blocks must match declarations
    CHECK_THROWS_AS(render_template(*t.tmpl, "x", std::string("extra")), std::logic_error);
    CHECK_THROWS_AS(render_template(*t2.tmpl, "x"), std::logic_error);
}

TEST_CASE("render strips the angle brackets of a bracketed placeholder") {
    auto t = validate_template("Text:\n<INSERT_INPUT_HERE>\nEnd", TaskKind::summarization);
    REQUIRE(t.ok());
    CHECK(render_template(*t.tmpl, "doc") == "Text:\ndoc\nEnd");
}

TEST_CASE("extract_tagged: first span, trimmed, with untagged fallback") {
    auto a = extract_tagged("<summary>foo</summary>", "summary");
    CHECK(a.text == "foo");
    CHECK(a.tagged);

    auto b = extract_tagged("x <answer>A</answer> y <answer>B</answer>", "answer");
    CHECK(b.text == "A");
    CHECK(b.tagged);

    auto c = extract_tagged("no tags here", "summary");
    CHECK(c.text == "no tags here");
    CHECK_FALSE(c.tagged);

    auto d = extract_tagged("  <summary>\n padded \n</summary>", "summary");
    CHECK(d.text == "padded");

    // unterminated open tag falls back to the whole completion
    auto e = extract_tagged("<summary>half open", "summary");
    CHECK_FALSE(e.tagged);
    CHECK(e.text == "<summary>half open");
}

TEST_CASE("format_examples stanzas") {
    const std::string one = format_examples({{"in", "out"}}, TaskKind::summarization);
    CHECK(one == "<examples>\n<example>\n<input>\nin\n</input>\n<summary>\nout\n</summary>\n"
                 "</example>\n</examples>");
    const std::string qa = format_examples({{"q", "a"}}, TaskKind::qa);
    CHECK(qa.find("<question>") != std::string::npos);
    CHECK(qa.find("<answer>") != std::string::npos);

    const std::string three =
        format_examples({{"1", "a"}, {"2", "b"}, {"3", "c"}}, TaskKind::summarization);
    CHECK(count_occurrences(three, "<example>") == 3);
    CHECK(three.find("1") < three.find("2"));
    CHECK(three.find("2") < three.find("3"));

    CHECK_THROWS_AS(format_examples({}, TaskKind::summarization), std::invalid_argument);
}

TEST_CASE("extract_tagged round-trips rendered tags") {
    crispo::Rng rng(31);
    const std::string alphabet = "abc <>/x\n\t";
    for (int trial = 0; trial < 200; ++trial) {
        std::string s = "s";
        const size_t len = rng.index(30);
        for (size_t i = 0; i < len; ++i) s.push_back(alphabet[rng.index(alphabet.size())]);
        s += "e";   // no leading/trailing whitespace so trim is the identity
        if (s.find("<summary>") != std::string::npos ||
            s.find("</summary>") != std::string::npos)
            continue;
        const auto got = extract_tagged("<summary>" + s + "</summary>", "summary");
        CHECK(got.tagged);
        CHECK(got.text == s);
    }
}

TEST_CASE("normalize_whitespace for duplicate detection") {
    CHECK(normalize_whitespace("  a\n\tb  c ") == "a b c");
    CHECK(normalize_whitespace("a b c") == normalize_whitespace("a\nb\nc"));
    CHECK(normalize_whitespace("") == "");
}
