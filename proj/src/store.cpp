#include "crispo/store.hpp"

#include "crispo/batch.hpp"
#include "crispo/errors.hpp"
#include "crispo/metrics.hpp"
#include "crispo/rng.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_set>

namespace crispo {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> Example::gold_texts() const {
    if (!references.empty()) return references;
    if (!gold_choice.empty()) return {gold_choice};
    return {};
}

namespace {

std::vector<std::string> string_array(const json& j, const char* field, const std::string& where) {
    std::vector<std::string> out;
    if (!j.contains(field)) return out;
    if (!j[field].is_array())
        throw DataError(where + ": field '" + field + "' must be an array of strings");
    for (const auto& v : j[field]) {
        if (!v.is_string())
            throw DataError(where + ": field '" + field + "' must be an array of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

struct SplitLoad {
    std::vector<Example> examples;
    int dropped = 0;
    int source_size = 0;
};

SplitLoad load_split(const fs::path& file, const std::string& split_name) {
    SplitLoad out;
    std::ifstream in(file);
    if (!in) throw DataError("cannot open dataset file: " + file.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = file.filename().string() + ":" + std::to_string(lineno);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError(where + ": invalid JSON record: " + e.what());
        }
        if (!j.is_object()) throw DataError(where + ": record must be a JSON object");
        Example ex;
        ex.id = j.value("id", split_name + ":" + std::to_string(lineno));
        if (!j.contains("input") || !j["input"].is_string())
            throw DataError(where + ": missing string field 'input'");
        ex.input = j["input"].get<std::string>();
        ex.references = string_array(j, "references", where);
        ex.contexts = string_array(j, "contexts", where);
        ex.choices = string_array(j, "choices", where);
        ex.gold_choice = j.value("gold_choice", "");
        ++out.source_size;
        if (ex.input.empty() || ex.gold_texts().empty()) {
            ++out.dropped;   // degenerate record, skipped with a count
            continue;
        }
        out.examples.push_back(std::move(ex));
    }
    return out;
}

void downsample(std::vector<Example>& xs, std::optional<int> target, Rng& rng) {
    if (!target || static_cast<size_t>(*target) >= xs.size()) return;
    if (*target < 0) throw ConfigError("split size must be non-negative");
    auto picks = rng.sample_indices(xs.size(), static_cast<size_t>(*target));
    std::sort(picks.begin(), picks.end());   // keep source order
    std::vector<Example> out;
    out.reserve(picks.size());
    for (size_t i : picks) out.push_back(std::move(xs[i]));
    xs = std::move(out);
}

} // namespace

DatasetSplits load_dataset(const fs::path& dir, TaskKind kind, const SplitSizes& sizes,
                           uint64_t seed) {
    DatasetSplits d;
    d.task_kind = kind;
    d.sample_seed = seed;

    SplitLoad train = load_split(dir / "train.jsonl", "train");
    SplitLoad dev = load_split(dir / "dev.jsonl", "dev");
    SplitLoad test;
    if (fs::exists(dir / "test.jsonl")) test = load_split(dir / "test.jsonl", "test");

    d.source_sizes = {train.source_size, dev.source_size, test.source_size};
    d.dropped_records = train.dropped + dev.dropped + test.dropped;

    Rng train_rng(derive_seed(seed, "sample-train"));
    Rng dev_rng(derive_seed(seed, "sample-dev"));
    Rng test_rng(derive_seed(seed, "sample-test"));
    downsample(train.examples, sizes.train, train_rng);
    downsample(dev.examples, sizes.dev, dev_rng);
    downsample(test.examples, sizes.test, test_rng);

    d.train = std::move(train.examples);
    d.dev = std::move(dev.examples);
    d.test = std::move(test.examples);

    std::unordered_set<std::string> seen;
    for (const auto* split : {&d.train, &d.dev, &d.test})
        for (const auto& ex : *split)
            if (!seen.insert(ex.id).second)
                throw DataError("duplicate example id across splits: " + ex.id);
    return d;
}

DiversityStats diversity_report(const std::vector<std::string>& prompts,
                                const EmbeddingProvider& embedder) {
    if (prompts.size() < 2)
        throw std::invalid_argument("diversity_report: need at least 2 prompts");

    DiversityStats s;
    s.prompt_count = static_cast<int>(prompts.size());

    std::vector<Tokens> toks;
    toks.reserve(prompts.size());
    std::set<std::string> vocab;
    double len_sum = 0.0;
    for (const auto& p : prompts) {
        toks.push_back(tokenize(p));
        for (const auto& t : toks.back()) vocab.insert(t);
        len_sum += static_cast<double>(toks.back().size());
    }
    const double n = static_cast<double>(prompts.size());
    s.len_mean = len_sum / n;
    double var = 0.0;
    for (const auto& t : toks) {
        const double d = static_cast<double>(t.size()) - s.len_mean;
        var += d * d;
    }
    s.len_std = std::sqrt(var / n);
    s.vocab = static_cast<int>(vocab.size());

    s.rouge_l_mean = par::pairwise_rouge_l_mean(toks);

    std::vector<std::vector<double>> embs;
    embs.reserve(prompts.size());
    for (const auto& p : prompts) embs.push_back(embedder.embed(p));
    s.cosine_mean = par::pairwise_cosine_mean(embs);
    return s;
}

std::string diversity_csv(const DiversityStats& s) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%d,%.6f,%.6f", s.prompt_count, s.len_mean,
                  s.len_std, s.vocab, s.rouge_l_mean, s.cosine_mean);
    return std::string("prompt_count,len_mean,len_std,vocab,rougeL_mean,cosine_mean\n") +
           buf + "\n";
}

JsonlWriter::JsonlWriter(const fs::path& path) : path_(path) {
    fs::create_directories(path.parent_path());
    out_.open(path, std::ios::app);
    if (!out_) throw DataError("cannot open for append: " + path.string());
}

void JsonlWriter::append(const json& record) {
    out_ << record.dump() << "\n";
    out_.flush();
    if (!out_) throw DataError("write failed: " + path_.string());
}

std::vector<json> read_jsonl(const fs::path& path, int* truncated_warnings) {
    std::vector<json> out;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    size_t pos = 0;
    while (pos < content.size()) {
        const size_t nl = content.find('\n', pos);
        if (nl == std::string::npos) {
            // partial final line: drop with a warning instead of failing
            if (truncated_warnings) ++*truncated_warnings;
            break;
        }
        const std::string line = content.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception&) {
            if (nl + 1 >= content.size() || content.find('\n', nl + 1) == std::string::npos) {
                if (truncated_warnings) ++*truncated_warnings;
                break;
            }
            throw DataError("corrupt record in " + path.string());
        }
    }
    return out;
}

void atomic_write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write: " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw DataError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void filter_jsonl(const fs::path& path, const std::function<bool(const json&)>& keep) {
    if (!fs::exists(path)) return;
    int warnings = 0;
    const auto records = read_jsonl(path, &warnings);
    std::string content;
    for (const auto& r : records)
        if (keep(r)) content += r.dump() + "\n";
    atomic_write_file(path, content);
}

} // namespace crispo
