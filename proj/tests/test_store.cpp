#include "crispo/store.hpp"

#include "crispo/batch.hpp"
#include "crispo/errors.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <fstream>

using namespace crispo;
using testsup::TempDir;

namespace {

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines,
                 bool trailing_newline = true) {
    std::ofstream out(p, std::ios::binary);
    for (size_t i = 0; i < lines.size(); ++i) {
        out << lines[i];
        if (i + 1 < lines.size() || trailing_newline) out << "\n";
    }
}

} // namespace

TEST_CASE("load_dataset: happy path, degenerate drops, context order") {
    TempDir dir("dataset");
    write_lines(dir.path() / "train.jsonl",
                {R"({"id":"t1","input":"doc one","references":["ref one"]})",
                 R"({"id":"t2","input":"doc two","references":["ref two","alt two"]})",
                 R"({"id":"bad1","input":"","references":["x"]})",
                 R"({"id":"bad2","input":"no refs"})"});
    write_lines(dir.path() / "dev.jsonl",
                {R"({"id":"d1","input":"dev doc","references":["dev ref"],)"
                 R"("contexts":["c1","c2","c3"]})"});

    const auto d = load_dataset(dir.path(), TaskKind::summarization);
    CHECK(d.train.size() == 2);
    CHECK(d.dev.size() == 1);
    CHECK(d.test.empty());
    CHECK(d.dropped_records == 2);
    CHECK(d.train[1].references.size() == 2);
    CHECK(d.dev[0].contexts == std::vector<std::string>{"c1", "c2", "c3"});
}

TEST_CASE("load_dataset: schema violations name the line") {
    TempDir dir("dataset-bad");
    write_lines(dir.path() / "train.jsonl",
                {R"({"id":"ok","input":"x","references":["y"]})", "{not json"});
    write_lines(dir.path() / "dev.jsonl", {R"({"id":"d","input":"x","references":["y"]})"});
    try {
        load_dataset(dir.path(), TaskKind::summarization);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("train.jsonl:2") != std::string::npos);
    }
}

TEST_CASE("load_dataset: seeded down-sampling is deterministic and order-preserving") {
    TempDir dir("dataset-sample");
    std::vector<std::string> lines;
    for (int i = 0; i < 20; ++i)
        lines.push_back(R"({"id":"t)" + std::to_string(i) + R"(","input":"doc )" +
                        std::to_string(i) + R"(","references":["r"]})");
    write_lines(dir.path() / "train.jsonl", lines);
    write_lines(dir.path() / "dev.jsonl", {R"({"id":"d","input":"x","references":["y"]})"});

    SplitSizes sizes;
    sizes.train = 5;
    const auto a = load_dataset(dir.path(), TaskKind::summarization, sizes, 42);
    const auto b = load_dataset(dir.path(), TaskKind::summarization, sizes, 42);
    const auto c = load_dataset(dir.path(), TaskKind::summarization, sizes, 43);
    REQUIRE(a.train.size() == 5);
    for (size_t i = 0; i < 5; ++i) CHECK(a.train[i].id == b.train[i].id);
    // source order preserved within the sample
    for (size_t i = 1; i < a.train.size(); ++i)
        CHECK(std::stoi(a.train[i - 1].id.substr(1)) < std::stoi(a.train[i].id.substr(1)));
    bool differs = c.train.size() != a.train.size();
    for (size_t i = 0; !differs && i < 5; ++i) differs = c.train[i].id != a.train[i].id;
    CHECK(differs);
}

TEST_CASE("load_dataset: duplicate ids across splits are rejected") {
    TempDir dir("dataset-dup");
    write_lines(dir.path() / "train.jsonl", {R"({"id":"x","input":"a","references":["r"]})"});
    write_lines(dir.path() / "dev.jsonl", {R"({"id":"x","input":"b","references":["r"]})"});
    CHECK_THROWS_AS(load_dataset(dir.path(), TaskKind::summarization), DataError);
}

TEST_CASE("gold_texts falls back to the gold choice") {
    Example ex;
    ex.input = "q";
    ex.choices = {"A", "B"};
    ex.gold_choice = "B";
    CHECK(ex.gold_texts() == std::vector<std::string>{"B"});
}

TEST_CASE("jsonl round-trip and truncated tail tolerance") {
    TempDir dir("jsonl");
    const auto path = dir.path() / "records.jsonl";
    {
        JsonlWriter w(path);
        w.append({{"i", 1}});
        w.append({{"i", 2}});
        w.append({{"i", 3}});
    }
    int warnings = 0;
    auto records = read_jsonl(path, &warnings);
    REQUIRE(records.size() == 3);
    CHECK(warnings == 0);
    for (int i = 0; i < 3; ++i) CHECK(records[i]["i"] == i + 1);

    // simulate a crash mid-append: partial final line without newline
    {
        std::ofstream out(path, std::ios::app | std::ios::binary);
        out << R"({"i":4,"tru)";
    }
    warnings = 0;
    records = read_jsonl(path, &warnings);
    CHECK(records.size() == 3);
    CHECK(warnings == 1);
}

TEST_CASE("filter_jsonl keeps matching records byte-identically") {
    TempDir dir("filter");
    const auto path = dir.path() / "records.jsonl";
    {
        JsonlWriter w(path);
        for (int i = 0; i < 5; ++i) w.append({{"iteration", i}, {"v", "x" + std::to_string(i)}});
    }
    const std::string before = read_file(path);
    filter_jsonl(path, [](const nlohmann::json& r) { return r["iteration"] <= 2; });
    const auto records = read_jsonl(path);
    REQUIRE(records.size() == 3);
    // the kept prefix is the original bytes
    CHECK(before.rfind(read_file(path), 0) == 0);
}

TEST_CASE("atomic_write_file replaces content completely") {
    TempDir dir("atomic");
    const auto path = dir.path() / "f.txt";
    atomic_write_file(path, "first version");
    atomic_write_file(path, "v2");
    CHECK(read_file(path) == "v2");
    CHECK(!std::filesystem::exists(dir.path() / "f.txt.tmp"));
}

TEST_CASE("diversity_report hand-checked values") {
    HashedNgramEmbedder emb;
    const auto s = diversity_report({"a b", "a b"}, emb);
    CHECK(s.prompt_count == 2);
    CHECK(s.len_mean == doctest::Approx(2.0));
    CHECK(s.len_std == doctest::Approx(0.0));
    CHECK(s.vocab == 2);
    CHECK(s.rouge_l_mean == doctest::Approx(1.0));
    CHECK(s.cosine_mean == doctest::Approx(1.0));

    const auto disjoint = diversity_report({"aa bb cc", "dd ee ff"}, emb);
    CHECK(disjoint.rouge_l_mean == doctest::Approx(0.0));
    CHECK(disjoint.vocab == 6);

    CHECK_THROWS_AS(diversity_report({"only one"}, emb), std::invalid_argument);
}

TEST_CASE("diversity stats are invariant under permutation") {
    HashedNgramEmbedder emb;
    const std::vector<std::string> prompts = {"one two three", "four five", "six", "one six"};
    std::vector<std::string> shuffled = {prompts[2], prompts[0], prompts[3], prompts[1]};
    const auto a = diversity_report(prompts, emb);
    const auto b = diversity_report(shuffled, emb);
    CHECK(a.len_mean == doctest::Approx(b.len_mean));
    CHECK(a.len_std == doctest::Approx(b.len_std));
    CHECK(a.vocab == b.vocab);
    CHECK(a.rouge_l_mean == doctest::Approx(b.rouge_l_mean));
    CHECK(a.cosine_mean == doctest::Approx(b.cosine_mean));
}

TEST_CASE("diversity csv columns") {
    DiversityStats s;
    s.prompt_count = 3;
    s.len_mean = 2.5;
    s.len_std = 0.5;
    s.vocab = 7;
    s.rouge_l_mean = 0.25;
    s.cosine_mean = 0.75;
    const std::string csv = diversity_csv(s);
    CHECK(csv.rfind("prompt_count,len_mean,len_std,vocab,rougeL_mean,cosine_mean\n", 0) == 0);
    CHECK(csv.find("3,2.500000,0.500000,7,0.250000,0.750000") != std::string::npos);
}
