#include "crispo/optimizer.hpp"

#include <doctest.h>

using namespace crispo;

namespace {

std::vector<TrajectoryEntry> history3() {
    return {{"p1", "T1 INSERT_INPUT_HERE", 0.3, "c1", 1},
            {"p2", "T2 INSERT_INPUT_HERE", 0.5, "c2", 2},
            {"p3", "T3 INSERT_INPUT_HERE", 0.4, "c3", 3}};
}

} // namespace

TEST_CASE("select_top_k: ascending output, best last") {
    const auto top2 = select_top_k(history3(), 2);
    REQUIRE(top2.size() == 2);
    CHECK(top2[0].candidate_id == "p3");   // 0.4 first (worst of the elite)
    CHECK(top2[1].candidate_id == "p2");   // 0.5 last (best)

    const auto all = select_top_k(history3(), 10);
    REQUIRE(all.size() == 3);
    CHECK(all[0].score == 0.3);
    CHECK(all[2].score == 0.5);

    CHECK_THROWS_AS(select_top_k({}, 3), std::invalid_argument);
}

TEST_CASE("select_top_k: ties prefer the more recent candidate") {
    std::vector<TrajectoryEntry> history = {{"old", "A INSERT_INPUT_HERE", 0.5, "", 4},
                                            {"new", "B INSERT_INPUT_HERE", 0.5, "", 9}};
    const auto top1 = select_top_k(history, 1);
    REQUIRE(top1.size() == 1);
    CHECK(top1[0].candidate_id == "new");
}

TEST_CASE("select_top_k: rank scores sort with lower-is-better") {
    std::vector<TrajectoryEntry> history = {{"a", "A", 1.5, "", 1},
                                            {"b", "B", 2.5, "", 2},
                                            {"c", "C", 2.0, "", 3}};
    const auto top2 = select_top_k(history, 2, /*lower_is_better=*/true);
    REQUIRE(top2.size() == 2);
    CHECK(top2[0].candidate_id == "c");   // 2.0 (worse of the kept two)
    CHECK(top2[1].candidate_id == "a");   // 1.5 (best) last
}

TEST_CASE("optimizer prompt: elite stanzas in ascending order with scores") {
    const auto elite = select_top_k(history3(), 10);
    OptimizerPromptSpec spec;
    const std::string mo = build_optimizer_prompt(elite, {{"IN", "OUT", ""}}, spec);
    CHECK(count_occurrences(mo, "<rated_instruction>") == 3);
    CHECK(mo.find("T1") < mo.find("T3"));
    CHECK(mo.find("T3") < mo.find("T2"));
    CHECK(mo.find("<score>30.0</score>") != std::string::npos);
    CHECK(mo.find("<score>50.0</score>") != std::string::npos);
    CHECK(mo.find("Compare high-score instructions to low-score ones") != std::string::npos);
}

TEST_CASE("optimizer prompt: OPRO shape strips critiques and the step list") {
    const auto elite = select_top_k(history3(), 10);
    OptimizerPromptSpec spec;
    spec.flags = AblationFlags::opro();
    const std::string mo = build_optimizer_prompt(elite, {{"IN", "OUT", ""}}, spec);
    CHECK(mo.find("critique") == std::string::npos);
    CHECK(mo.find("suggestion") == std::string::npos);
    CHECK(mo.find("1. Compare") == std::string::npos);
    CHECK(mo.find("step by step") == std::string::npos);
    CHECK(mo.find("Write your final new instruction in <instruction> tags.") !=
          std::string::npos);
    CHECK(mo.find("Below are some previous instructions with their scores.") !=
          std::string::npos);
}

TEST_CASE("optimizer prompt: individual flags prune their own section") {
    const auto elite = select_top_k(history3(), 10);

    OptimizerPromptSpec no_crit;
    no_crit.flags.use_critique = false;
    const std::string a = build_optimizer_prompt(elite, {{"I", "O", ""}}, no_crit);
    CHECK(a.find("<critique>") == std::string::npos);
    CHECK(a.find("Draft your new instruction step by step:") != std::string::npos);

    OptimizerPromptSpec no_cot;
    no_cot.flags.use_cot = false;
    const std::string b = build_optimizer_prompt(elite, {{"I", "O", ""}}, no_cot);
    CHECK(b.find("Draft your new instruction step by step:") == std::string::npos);
    CHECK(b.find("<critique>") != std::string::npos);

    OptimizerPromptSpec fixed;
    fixed.flags.use_flexible_template = false;
    const std::string c = build_optimizer_prompt(elite, {{"I", "O", ""}}, fixed);
    CHECK(c.find("INSERT_INPUT_HERE and INSERT_EXAMPLES_HERE") == std::string::npos);
    CHECK(c.find("3. Be creative and vary the wording, paraphrase, phrase order") !=
          std::string::npos);
}

TEST_CASE("ast context shows the frozen main prompt once") {
    std::vector<TrajectoryEntry> elite = {{"s0", "Be faithful.", 1.5, "crit", 0}};
    OptimizerPromptSpec spec;
    spec.rank_scored = true;
    spec.ast = AstOptimizerContext{"MAIN INSERT_INPUT_HERE"};
    const std::string mo = build_optimizer_prompt(elite, {{"I", "O", ""}}, spec);
    CHECK(mo.find("<main_prompt>\nMAIN INSERT_INPUT_HERE\n</main_prompt>") != std::string::npos);
    CHECK(mo.find("average rank") != std::string::npos);
    CHECK(mo.find("<score>1.5</score>") != std::string::npos);
}

TEST_CASE("parse_new_candidates: extraction, validation, dedupe") {
    const std::string completion =
        "thinking...\n<instruction>Summarize INSERT_INPUT_HERE briefly</instruction>\n"
        "<instruction>No placeholder here</instruction>\n"
        "<instruction>Summarize   INSERT_INPUT_HERE   briefly</instruction>\n"
        "<instruction>Second valid INSERT_INPUT_HERE</instruction>";
    const auto parsed =
        parse_new_candidates(completion, 5, TaskKind::summarization, true, {});
    REQUIRE(parsed.valid.size() == 2);
    CHECK(parsed.valid[0] == "Summarize INSERT_INPUT_HERE briefly");
    CHECK(parsed.valid[1] == "Second valid INSERT_INPUT_HERE");
    CHECK(parsed.invalid == 1);
    CHECK(parsed.duplicates == 1);   // whitespace-normalized twin dropped

    // history duplicates are dropped too
    const auto vs_history = parse_new_candidates(
        "<instruction>Summarize INSERT_INPUT_HERE briefly</instruction>", 1,
        TaskKind::summarization, true, {"Summarize INSERT_INPUT_HERE briefly"});
    CHECK(vs_history.valid.empty());
    CHECK(vs_history.duplicates == 1);

    // missing tags: nothing extracted, caller resamples
    CHECK(parse_new_candidates("no tags at all", 1, TaskKind::summarization, true, {})
              .valid.empty());
}

TEST_CASE("parse_new_candidates: fixed layout takes plain instructions only") {
    const auto parsed = parse_new_candidates(
        "<instruction>Summarize the text concisely</instruction>"
        "<instruction>Bad INSERT_INPUT_HERE</instruction>",
        5, TaskKind::summarization, false, {});
    REQUIRE(parsed.valid.size() == 1);
    CHECK(parsed.valid[0] == "Summarize the text concisely");
    CHECK(parsed.invalid == 1);
}

TEST_CASE("format_trajectory_score") {
    CHECK(format_trajectory_score(0.423, false) == "42.3");
    CHECK(format_trajectory_score(1.0, false) == "100.0");
    CHECK(format_trajectory_score(1.5, true) == "1.5");
}
