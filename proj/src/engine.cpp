#include "crispo/engine.hpp"

#include "crispo/batch.hpp"
#include "crispo/providers.hpp"
#include "crispo/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

namespace crispo {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(ScoringMode m) {
    return m == ScoringMode::primary_metric ? "primary_metric" : "rank_aggregate";
}

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::optimize: return "optimize";
        case RunMode::ast: return "ast";
        case RunMode::full_tune: return "full_tune";
    }
    throw std::logic_error("unreachable run mode");
}

namespace {

ScoringMode scoring_from_string(const std::string& s) {
    if (s == "primary_metric") return ScoringMode::primary_metric;
    if (s == "rank_aggregate") return ScoringMode::rank_aggregate;
    throw ConfigError("unknown scoring mode: " + s);
}

RunMode run_mode_from_string(const std::string& s) {
    if (s == "optimize") return RunMode::optimize;
    if (s == "ast") return RunMode::ast;
    if (s == "full_tune") return RunMode::full_tune;
    throw ConfigError("unknown run mode: " + s);
}

std::string candidate_id_for(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "c%04d", index);
    return buf;
}

std::string join_contexts(const std::vector<std::string>& contexts) {
    std::string out;
    for (size_t i = 0; i < contexts.size(); ++i) {
        if (i) out += "\n\n";
        out += contexts[i];
    }
    return out;
}

} // namespace

CritiqueVariant OptimizationConfig::variant() const {
    switch (critique_variant) {
        case CritiqueVariant::Kind::multi_aspect_free: return CritiqueVariant::free_aspects();
        case CritiqueVariant::Kind::no_aspect: return CritiqueVariant::no_aspects();
        case CritiqueVariant::Kind::predefined_aspects:
            return predefined_aspects.empty() ? CritiqueVariant::predefined_default()
                                              : CritiqueVariant::predefined(predefined_aspects);
    }
    throw std::logic_error("unreachable critique variant");
}

std::vector<MetricSpec> OptimizationConfig::metrics() const {
    if (metric_ids.empty()) throw ConfigError("at least one metric is required");
    std::vector<MetricSpec> out;
    out.reserve(metric_ids.size());
    for (size_t i = 0; i < metric_ids.size(); ++i) {
        MetricSpec spec = parse_metric_id(metric_ids[i]);
        spec.primary = (i == 0);
        out.push_back(std::move(spec));
    }
    return out;
}

json config_to_json(const OptimizationConfig& cfg) {
    json j;
    j["task_kind"] = to_string(cfg.task_kind);
    j["family"] = to_string(cfg.family);
    j["iterations"] = cfg.iterations;
    j["candidates_per_step"] = cfg.candidates_per_step;
    j["top_k"] = cfg.top_k;
    j["critique_examples"] = cfg.critique_examples;
    j["dev_eval_every"] = cfg.dev_eval_every;
    j["io_examples"] = cfg.io_examples;
    if (cfg.train_size) j["train_size"] = *cfg.train_size;
    if (cfg.dev_size) j["dev_size"] = *cfg.dev_size;
    if (cfg.test_size) j["test_size"] = *cfg.test_size;
    j["seed"] = cfg.seed;
    j["use_critique"] = cfg.flags.use_critique;
    j["use_cot"] = cfg.flags.use_cot;
    j["use_flexible_template"] = cfg.flags.use_flexible_template;
    j["critique_variant"] = to_string(cfg.critique_variant);
    if (!cfg.predefined_aspects.empty()) {
        json aspects = json::array();
        for (const auto& a : cfg.predefined_aspects)
            aspects.push_back({{"name", a.name}, {"definition", a.definition}});
        j["predefined_aspects"] = aspects;
    }
    j["metrics"] = cfg.metric_ids;
    j["scoring"] = to_string(cfg.scoring);
    j["icl_shots"] = cfg.icl_shots;
    j["parallelism"] = cfg.parallelism;
    j["max_flagged_fraction"] = cfg.max_flagged_fraction;
    j["mode"] = to_string(cfg.mode);
    j["seed_prompt"] = cfg.seed_prompt;
    if (!cfg.frozen_prefix.empty()) j["frozen_prefix"] = cfg.frozen_prefix;
    return j;
}

OptimizationConfig config_from_json(const json& j) {
    OptimizationConfig cfg;
    try {
        cfg.task_kind = task_kind_from_string(j.value("task_kind", "summarization"));
        cfg.family = prompt_family_from_string(j.value("family", "claude"));
        cfg.iterations = j.value("iterations", 100);
        cfg.candidates_per_step = j.value("candidates_per_step", 3);
        cfg.top_k = j.value("top_k", 10);
        cfg.critique_examples = j.value("critique_examples", 10);
        cfg.dev_eval_every = j.value("dev_eval_every", 5);
        cfg.io_examples = j.value("io_examples", 2);
        if (j.contains("train_size")) cfg.train_size = j["train_size"].get<int>();
        if (j.contains("dev_size")) cfg.dev_size = j["dev_size"].get<int>();
        if (j.contains("test_size")) cfg.test_size = j["test_size"].get<int>();
        cfg.seed = j.value("seed", 0ULL);
        cfg.flags.use_critique = j.value("use_critique", true);
        cfg.flags.use_cot = j.value("use_cot", true);
        cfg.flags.use_flexible_template = j.value("use_flexible_template", true);
        cfg.critique_variant =
            critique_variant_kind_from_string(j.value("critique_variant", "multi_aspect_free"));
        if (j.contains("predefined_aspects")) {
            for (const auto& a : j["predefined_aspects"])
                cfg.predefined_aspects.push_back(
                    {a.at("name").get<std::string>(), a.at("definition").get<std::string>()});
        }
        if (j.contains("metrics")) cfg.metric_ids = j["metrics"].get<std::vector<std::string>>();
        cfg.scoring = scoring_from_string(j.value("scoring", "primary_metric"));
        cfg.icl_shots = j.value("icl_shots", 0);
        cfg.parallelism = j.value("parallelism", 4);
        cfg.max_flagged_fraction = j.value("max_flagged_fraction", 0.2);
        cfg.mode = run_mode_from_string(j.value("mode", "optimize"));
        cfg.seed_prompt = j.value("seed_prompt", "");
        cfg.frozen_prefix = j.value("frozen_prefix", "");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    return cfg;
}

std::string config_hash(const OptimizationConfig& cfg) {
    return sha256_hex(config_to_json(cfg).dump());
}

namespace {

void validate_config(const OptimizationConfig& cfg, const DatasetSplits& data) {
    if (cfg.iterations < 0) throw ConfigError("iterations must be >= 0");
    if (cfg.candidates_per_step < 1) throw ConfigError("candidates_per_step must be >= 1");
    if (cfg.top_k < 1) throw ConfigError("top_k must be >= 1");
    if (cfg.critique_examples < 1) throw ConfigError("critique_examples must be >= 1");
    if (cfg.dev_eval_every < 1) throw ConfigError("dev_eval_every must be >= 1");
    if (cfg.io_examples < 0) throw ConfigError("io_examples must be >= 0");
    if (cfg.iterations > 0 && cfg.dev_eval_every > cfg.iterations)
        throw ConfigError("dev_eval_every must not exceed iterations");
    if (data.train.empty()) throw DataError("train split is empty");
    if (data.dev.empty()) throw DataError("dev split is empty");
    if (static_cast<size_t>(cfg.critique_examples) > data.train.size())
        throw ConfigError("critique_examples exceeds train split size");
    if (static_cast<size_t>(cfg.io_examples) > data.train.size())
        throw ConfigError("io_examples exceeds train split size");
    if (cfg.icl_shots < 0) throw ConfigError("icl_shots must be >= 0");
    if (cfg.icl_shots > 0) {
        if (!cfg.flags.use_flexible_template)
            throw ConfigError("icl_shots requires the flexible template");
        if (static_cast<size_t>(cfg.icl_shots) + 1 > data.train.size())
            throw ConfigError("icl_shots exceeds the retrievable train pool");
    }
    if (cfg.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (cfg.max_flagged_fraction < 0.0 || cfg.max_flagged_fraction > 1.0)
        throw ConfigError("max_flagged_fraction must be in [0,1]");
    if (cfg.metric_ids.empty()) throw ConfigError("at least one metric is required");
    if (cfg.scoring == ScoringMode::rank_aggregate && cfg.metric_ids.size() < 2)
        throw ConfigError("rank-aggregate scoring needs at least two metrics");
    if (cfg.mode != RunMode::optimize && cfg.frozen_prefix.empty() && cfg.mode == RunMode::ast)
        throw ConfigError("ast mode needs a frozen main prompt");
    if (cfg.seed_prompt.empty()) throw ConfigError("seed prompt is empty");
}

} // namespace

Engine::Engine(OptimizationConfig cfg, DatasetSplits data, Gateway& gateway,
               std::shared_ptr<EmbeddingProvider> embedder, RunPaths paths)
    : cfg_(std::move(cfg)),
      data_(std::move(data)),
      gateway_(gateway),
      embedder_(std::move(embedder)),
      paths_(std::move(paths)) {
    validate_config(cfg_, data_);
    metrics_ = cfg_.metrics();

    // I/O examples shown in the optimizer prompt are fixed per run.
    Rng io_rng(derive_seed(cfg_.seed, "io-examples"));
    for (size_t idx : io_rng.sample_indices(data_.train.size(),
                                            static_cast<size_t>(cfg_.io_examples))) {
        const Example& ex = data_.train[idx];
        io_examples_.push_back({ex.input, ex.gold_texts().front(), join_contexts(ex.contexts)});
    }

    if (cfg_.icl_shots > 0) {
        std::vector<std::string> pool;
        pool.reserve(data_.train.size());
        for (const auto& ex : data_.train) pool.push_back(ex.input);
        icl_index_ = std::make_unique<RetrievalIndex>(std::move(pool), *embedder_);
    }

    for (const auto& m : metrics_)
        if (m.kind == MetricKind::external)
            scorers_[m.id] = std::make_unique<ExternalScorerClient>(m.endpoint);
}

std::string Engine::composed_text(const std::string& candidate_text) const {
    if (cfg_.mode == RunMode::ast) return cfg_.frozen_prefix + "\n" + candidate_text;
    return candidate_text;
}

std::string Engine::render_task_prompt(const std::string& candidate_text, const Example& ex) {
    const std::string full = composed_text(candidate_text);
    if (!cfg_.flags.use_flexible_template) {
        // fixed layout: instruction first, input (and contexts) at the end
        std::string out = full + "\n\n";
        if (!ex.contexts.empty()) out += join_contexts(ex.contexts) + "\n\n";
        out += ex.input;
        return out;
    }
    const TemplateValidation v = validate_template(full, cfg_.task_kind);
    if (!v.ok())
        throw std::logic_error("render_task_prompt: candidate no longer validates: " + full);
    const PromptTemplate& t = *v.tmpl;

    std::optional<std::string> examples_block;
    if (t.has(Placeholder::examples)) {
        examples_block = std::string();
        if (cfg_.icl_shots > 0) {
            const auto picks = icl_index_->retrieve(ex.input, static_cast<size_t>(cfg_.icl_shots),
                                                    /*exclude_exact=*/true);
            std::vector<std::pair<std::string, std::string>> pairs;
            for (size_t p : picks)
                pairs.emplace_back(data_.train[p].input, data_.train[p].gold_texts().front());
            examples_block = format_examples(pairs, cfg_.task_kind);
        }
    }
    std::optional<std::string> context_block;
    if (t.has(Placeholder::context)) context_block = join_contexts(ex.contexts);

    return render_template(t, ex.input, examples_block, context_block);
}

double Engine::score_external(const MetricSpec& metric, const std::string& prediction,
                              const Example& ex) const {
    const std::string& counterpart =
        metric.pair_with_input ? ex.input : ex.gold_texts().front();
    return scorers_.at(metric.id)->score(prediction, counterpart);
}

EvalResult Engine::evaluate_candidate(const std::string& candidate_text,
                                      const std::vector<Example>& split, int iteration,
                                      const std::string& purpose,
                                      const std::string& candidate_id) {
    if (split.empty()) throw DataError("evaluate: empty split");
    const RoleConfig& task_cfg = gateway_.role_config(Role::task);

    std::vector<CompletionRequest> requests;
    requests.reserve(split.size());
    for (const auto& ex : split) {
        CompletionRequest req;
        req.role = Role::task;
        req.prompt = render_task_prompt(candidate_text, ex);
        req.temperature = task_cfg.temperature;
        req.max_output_tokens = task_cfg.max_output_tokens;
        requests.push_back(std::move(req));
    }
    const auto outcomes = gateway_.complete_many(requests, cfg_.parallelism);

    EvalResult result;
    result.rows.resize(split.size());
    const std::string answer_tag =
        cfg_.task_kind == TaskKind::summarization ? "summary" : "answer";

    std::vector<std::string> preds(split.size());
    for (size_t i = 0; i < split.size(); ++i) {
        PerExampleRow& row = result.rows[i];
        row.example_id = split[i].id;
        record_transcript(iteration, Role::task, purpose, candidate_id, split[i].id,
                          requests[i].prompt, outcomes[i]);
        if (!outcomes[i].ok()) {
            row.errored = true;
            row.error = outcomes[i].error;
            ++result.flagged;
            continue;
        }
        const TaggedExtract ext = extract_tagged(outcomes[i].completion->text, answer_tag);
        row.prediction = ext.text;
        row.tagged = ext.tagged;
        if (!ext.tagged) ++result.untagged;
        preds[i] = ext.text;
    }

    for (const auto& metric : metrics_) {
        std::vector<double> scores;
        if (metric.kind == MetricKind::external) {
            scores.resize(split.size(), 0.0);
            for (size_t i = 0; i < split.size(); ++i) {
                if (result.rows[i].errored) continue;
                try {
                    scores[i] = score_external(metric, preds[i], split[i]);
                } catch (const std::exception& e) {
                    result.rows[i].errored = true;
                    result.rows[i].error = e.what();
                    ++result.flagged;
                }
            }
        } else {
            std::vector<std::vector<std::string>> refs;
            refs.reserve(split.size());
            for (const auto& ex : split) refs.push_back(ex.gold_texts());
            scores = par::score_batch(metric, preds, refs);
        }
        for (size_t i = 0; i < split.size(); ++i) {
            if (result.rows[i].errored) scores[i] = 0.0;   // flagged examples score 0
            result.rows[i].scores[metric.id] = scores[i];
        }
        result.aggregates[metric.id] = aggregate(scores);
    }

    result.failed = static_cast<double>(result.flagged) >
                    cfg_.max_flagged_fraction * static_cast<double>(split.size());
    return result;
}

std::string Engine::critique_candidate(const CandidateState& cand, const EvalResult& train_eval,
                                       int iteration, size_t slot) {
    Rng rng(derive_seed(cfg_.seed, "critique-batch", static_cast<uint64_t>(iteration), slot));
    const auto picks = sample_critique_examples(
        data_.train.size(), static_cast<size_t>(cfg_.critique_examples), rng);

    std::vector<CritiqueExampleRow> batch;
    batch.reserve(picks.size());
    for (size_t idx : picks) {
        const Example& ex = data_.train[idx];
        CritiqueExampleRow row;
        row.input = ex.input;
        row.prediction = train_eval.rows[idx].prediction;
        row.reference = ex.gold_texts().front();
        row.context = join_contexts(ex.contexts);
        batch.push_back(std::move(row));
    }

    std::optional<AstCritiqueContext> ast;
    if (cfg_.mode == RunMode::ast) ast = AstCritiqueContext{cand.text};

    const std::string prompt = build_critique_prompt(composed_text(cand.text), batch,
                                                     cfg_.variant(), cfg_.task_kind, cfg_.family,
                                                     ast);
    const RoleConfig& crit_cfg = gateway_.role_config(Role::critique);
    CompletionRequest req;
    req.role = Role::critique;
    req.prompt = prompt;
    req.temperature = crit_cfg.temperature;
    req.max_output_tokens = crit_cfg.max_output_tokens;

    CompletionOutcome outcome;
    try {
        outcome.completion = gateway_.complete(req);
    } catch (const std::exception& e) {
        outcome.error = e.what();
    }
    record_transcript(iteration, Role::critique, "critique", cand.id, "", prompt, outcome);
    if (!outcome.ok()) return "";   // candidate stays in history without a critique
    return parse_critique(outcome.completion->text).trajectory_text();
}

std::vector<double> Engine::pool_train_ranks() const {
    ScoreMatrix m;
    for (const auto& c : history_) {
        m.candidate_ids.push_back(c.id);
        std::vector<double> row;
        for (const auto& metric : metrics_) row.push_back(c.train_scores.at(metric.id));
        m.cells.push_back(std::move(row));
    }
    for (const auto& metric : metrics_) {
        m.metric_ids.push_back(metric.id);
        m.higher_is_better.push_back(metric.higher_is_better);
    }
    return rank_aggregate(m);
}

bool Engine::fitness_better(double a, double b) const {
    return cfg_.scoring == ScoringMode::rank_aggregate ? a < b : a > b;
}

double Engine::train_fitness(const CandidateState& c, const std::vector<double>& ranks,
                             size_t index) const {
    if (cfg_.scoring == ScoringMode::rank_aggregate) return ranks[index];
    return c.train_scores.at(cfg_.primary_metric_id());
}

size_t Engine::best_train_index() const {
    const std::vector<double> ranks =
        cfg_.scoring == ScoringMode::rank_aggregate ? pool_train_ranks() : std::vector<double>();
    size_t best = 0;
    for (size_t i = 1; i < history_.size(); ++i) {
        const double fi = train_fitness(history_[i], ranks, i);
        const double fb = train_fitness(history_[best], ranks, best);
        if (fitness_better(fi, fb) ||
            (fi == fb && history_[i].iteration >= history_[best].iteration))
            best = i;
    }
    return best;
}

std::vector<TrajectoryEntry> Engine::trajectory() const {
    const std::vector<double> ranks =
        cfg_.scoring == ScoringMode::rank_aggregate ? pool_train_ranks() : std::vector<double>();
    std::vector<TrajectoryEntry> out;
    out.reserve(history_.size());
    for (size_t i = 0; i < history_.size(); ++i) {
        const CandidateState& c = history_[i];
        out.push_back({c.id, c.text, train_fitness(c, ranks, i), c.critique, c.iteration});
    }
    return out;
}

void Engine::record_transcript(int iteration, Role role, const std::string& purpose,
                               const std::string& candidate_id, const std::string& example_id,
                               const std::string& prompt, const CompletionOutcome& outcome) {
    if (!transcripts_out_) {   // standalone evaluation: nothing to persist
        if (outcome.ok()) {
            total_prompt_tokens_ += outcome.completion->usage.prompt_tokens;
            total_completion_tokens_ += outcome.completion->usage.completion_tokens;
        }
        return;
    }
    json j;
    j["iteration"] = iteration;
    j["role"] = to_string(role);
    j["purpose"] = purpose;
    j["candidate_id"] = candidate_id;
    j["example_id"] = example_id;
    j["prompt"] = prompt;
    if (outcome.ok()) {
        j["completion"] = outcome.completion->text;
        j["prompt_tokens"] = outcome.completion->usage.prompt_tokens;
        j["completion_tokens"] = outcome.completion->usage.completion_tokens;
        j["latency_ms"] = outcome.completion->latency_ms;
        j["attempts"] = outcome.completion->attempts;
        total_prompt_tokens_ += outcome.completion->usage.prompt_tokens;
        total_completion_tokens_ += outcome.completion->usage.completion_tokens;
    } else {
        j["completion"] = "";
        j["prompt_tokens"] = 0;
        j["completion_tokens"] = 0;
        j["latency_ms"] = 0;
        j["attempts"] = 0;
        j["error"] = outcome.error;
    }
    transcripts_out_->append(j);
}

void Engine::record_candidate(const CandidateState& cand, const EvalResult& eval,
                              const std::string& status) {
    json j;
    j["id"] = cand.id;
    j["iteration"] = cand.iteration;
    j["text"] = cand.text;
    if (cfg_.mode == RunMode::ast) j["composed"] = composed_text(cand.text);
    j["status"] = status;
    j["train_scores"] = cand.train_scores;
    j["critique"] = cand.critique;
    j["flagged"] = eval.flagged;
    j["untagged"] = eval.untagged;
    json rows = json::array();
    for (const auto& r : eval.rows) {
        json row;
        row["example_id"] = r.example_id;
        row["prediction"] = r.prediction;
        row["tagged"] = r.tagged;
        row["errored"] = r.errored;
        if (!r.error.empty()) row["error"] = r.error;
        row["scores"] = r.scores;
        rows.push_back(std::move(row));
    }
    j["per_example"] = std::move(rows);
    candidates_out_->append(j);
}

void Engine::write_state(int completed_iteration, bool finished) {
    json j;
    j["config_hash"] = config_hash(cfg_);
    j["completed_iteration"] = completed_iteration;
    j["finished"] = finished;
    j["no_op_steps"] = no_op_steps_;
    j["next_candidate"] = next_candidate_;
    atomic_write_file(paths_.state(), j.dump(2) + "\n");
}

void Engine::bootstrap_seed_candidate() {
    CandidateState cand;
    cand.id = candidate_id_for(next_candidate_++);
    cand.iteration = 0;
    cand.text = cfg_.seed_prompt;

    EvalResult eval = evaluate_candidate(cand.text, data_.train, 0, "train_eval", cand.id);
    if (eval.failed) {
        record_candidate(cand, eval, "eval_failed");
        write_state(-1, false);
        throw ProviderError("seed prompt evaluation failed (" + std::to_string(eval.flagged) +
                                " flagged examples); run is resumable",
                            false);
    }
    cand.train_scores = eval.aggregates;
    cand.flagged = eval.flagged;
    cand.untagged = eval.untagged;
    if (cfg_.flags.use_critique) cand.critique = critique_candidate(cand, eval, 0, 0);

    record_candidate(cand, eval, "ok");
    history_normalized_.push_back(normalize_whitespace(cand.text));
    history_.push_back(std::move(cand));

    // AST runs dev-evaluate the seed suffix up front so the final pool always
    // contains it.
    if (cfg_.mode == RunMode::ast) dev_gate(0);
    write_state(0, false);
}

void Engine::dev_gate(int iteration) {
    const size_t best = best_train_index();
    CandidateState& cand = history_[best];

    json record;
    record["iteration"] = iteration;
    record["candidate_id"] = cand.id;
    if (cand.dev_scores) {
        record["cached"] = true;
        record["scores"] = *cand.dev_scores;
        record["failed"] = false;
    } else {
        const EvalResult eval =
            evaluate_candidate(cand.text, data_.dev, iteration, "dev_eval", cand.id);
        record["cached"] = false;
        record["scores"] = eval.aggregates;
        record["failed"] = eval.failed;
        if (!eval.failed) cand.dev_scores = eval.aggregates;
    }
    if (cfg_.scoring == ScoringMode::primary_metric && cand.dev_scores) {
        const double dev = cand.dev_scores->at(cfg_.primary_metric_id());
        if (!best_dev_so_far_ || dev > *best_dev_so_far_) best_dev_so_far_ = dev;
        record["best_so_far"] = *best_dev_so_far_;
    }
    dev_out_->append(record);
}

int Engine::step(int iteration) {
    const std::vector<TrajectoryEntry> elite =
        select_top_k(trajectory(), cfg_.top_k,
                     /*lower_is_better=*/cfg_.scoring == ScoringMode::rank_aggregate);

    OptimizerPromptSpec spec;
    spec.kind = cfg_.task_kind;
    spec.family = cfg_.family;
    spec.flags = cfg_.flags;
    spec.rank_scored = cfg_.scoring == ScoringMode::rank_aggregate;
    if (cfg_.mode == RunMode::ast) spec.ast = AstOptimizerContext{cfg_.frozen_prefix};
    const std::string mo = build_optimizer_prompt(elite, io_examples_, spec);

    const RoleConfig& opt_cfg = gateway_.role_config(Role::optimizer);
    int accepted = 0;
    for (int slot = 0; slot < cfg_.candidates_per_step; ++slot) {
        std::string text;
        // one retry with a fresh draw when a call yields no valid candidate
        for (int attempt = 0; attempt < 2 && text.empty(); ++attempt) {
            CompletionRequest req;
            req.role = Role::optimizer;
            req.prompt = mo;
            req.temperature = opt_cfg.temperature;
            req.max_output_tokens = opt_cfg.max_output_tokens;
            CompletionOutcome outcome;
            try {
                outcome.completion = gateway_.complete(req);
            } catch (const std::exception& e) {
                // unrecoverable provider failure; the run record stays resumable
                outcome.error = e.what();
                record_transcript(iteration, Role::optimizer, "propose", "", "", mo, outcome);
                throw;
            }
            record_transcript(iteration, Role::optimizer, "propose", "", "", mo, outcome);
            const ParsedCandidates parsed =
                parse_new_candidates(outcome.completion->text, 1, cfg_.task_kind,
                                     cfg_.flags.use_flexible_template &&
                                         cfg_.mode != RunMode::ast,
                                     history_normalized_);
            if (!parsed.valid.empty()) text = parsed.valid.front();
        }
        if (text.empty()) continue;   // slot records a no-op

        CandidateState cand;
        cand.id = candidate_id_for(next_candidate_++);
        cand.iteration = iteration;
        cand.text = text;
        const EvalResult eval =
            evaluate_candidate(cand.text, data_.train, iteration, "train_eval", cand.id);
        if (eval.failed) {
            cand.train_scores = eval.aggregates;
            record_candidate(cand, eval, "eval_failed");
            continue;
        }
        cand.train_scores = eval.aggregates;
        cand.flagged = eval.flagged;
        cand.untagged = eval.untagged;
        if (cfg_.flags.use_critique)
            cand.critique = critique_candidate(cand, eval, iteration, static_cast<size_t>(slot));

        record_candidate(cand, eval, "ok");
        history_normalized_.push_back(normalize_whitespace(cand.text));
        history_.push_back(std::move(cand));
        ++accepted;
    }
    return accepted;
}

OptimizeResult Engine::run() {
    fs::create_directories(paths_.dir);
    atomic_write_file(paths_.config(), config_to_json(cfg_).dump(2) + "\n");
    candidates_out_ = std::make_unique<JsonlWriter>(paths_.candidates());
    transcripts_out_ = std::make_unique<JsonlWriter>(paths_.transcripts());
    dev_out_ = std::make_unique<JsonlWriter>(paths_.dev_evals());
    if (cfg_.mode == RunMode::ast)
        atomic_write_file(paths_.main_prompt(), cfg_.frozen_prefix);
    write_state(-1, false);
    bootstrap_seed_candidate();
    return run_loop(1);
}

OptimizeResult Engine::run_loop(int first_iteration) {
    const auto started = std::chrono::steady_clock::now();
    for (int t = first_iteration; t <= cfg_.iterations; ++t) {
        const int accepted = step(t);
        if (accepted == 0) ++no_op_steps_;
        if (t % cfg_.dev_eval_every == 0) dev_gate(t);
        write_state(t, false);
    }
    OptimizeResult result = finish();
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);

    json meta;
    meta["best_id"] = result.best_id;
    meta["best_text"] = result.best_text;
    meta["best_suffix"] = result.best_suffix;
    if (result.best_dev_score) meta["best_dev_score"] = *result.best_dev_score;
    meta["best_train_score"] = result.best_train_score;
    meta["candidate_count"] = result.candidate_count;
    meta["no_op_steps"] = result.no_op_steps;
    meta["total_prompt_tokens"] = total_prompt_tokens_;
    meta["total_completion_tokens"] = total_completion_tokens_;
    meta["wall_clock_ms"] = elapsed.count();
    if (cfg_.scoring == ScoringMode::rank_aggregate) {
        json ranks = json::object();
        std::vector<const CandidateState*> dev_pool;
        for (const auto& c : history_)
            if (c.dev_scores) dev_pool.push_back(&c);
        if (!dev_pool.empty()) {
            ScoreMatrix m;
            for (const auto* c : dev_pool) {
                m.candidate_ids.push_back(c->id);
                std::vector<double> row;
                for (const auto& metric : metrics_) row.push_back(c->dev_scores->at(metric.id));
                m.cells.push_back(std::move(row));
            }
            for (const auto& metric : metrics_) {
                m.metric_ids.push_back(metric.id);
                m.higher_is_better.push_back(metric.higher_is_better);
            }
            const auto avg = rank_aggregate(m);
            for (size_t i = 0; i < dev_pool.size(); ++i) ranks[dev_pool[i]->id] = avg[i];
        }
        meta["final_dev_ranks"] = ranks;
    }
    atomic_write_file(paths_.meta(), meta.dump(2) + "\n");
    write_state(cfg_.iterations, true);
    return result;
}

OptimizeResult Engine::finish() {
    // Dev-gated selection: best dev fitness among dev-evaluated candidates
    // (ties: higher train fitness, then more recent); candidates never
    // dev-evaluated only matter when nothing was dev-evaluated at all.
    OptimizeResult result;
    result.run_dir = paths_.dir;
    result.candidate_count = static_cast<int>(history_.size());
    result.no_op_steps = no_op_steps_;

    const std::vector<double> train_ranks =
        cfg_.scoring == ScoringMode::rank_aggregate ? pool_train_ranks() : std::vector<double>();

    std::vector<size_t> dev_pool;
    for (size_t i = 0; i < history_.size(); ++i)
        if (history_[i].dev_scores) dev_pool.push_back(i);

    size_t chosen;
    std::optional<double> chosen_dev;
    if (!dev_pool.empty()) {
        std::vector<double> dev_fitness(dev_pool.size());
        if (cfg_.scoring == ScoringMode::rank_aggregate) {
            ScoreMatrix m;
            for (size_t i : dev_pool) {
                m.candidate_ids.push_back(history_[i].id);
                std::vector<double> row;
                for (const auto& metric : metrics_)
                    row.push_back(history_[i].dev_scores->at(metric.id));
                m.cells.push_back(std::move(row));
            }
            for (const auto& metric : metrics_) {
                m.metric_ids.push_back(metric.id);
                m.higher_is_better.push_back(metric.higher_is_better);
            }
            dev_fitness = rank_aggregate(m);
        } else {
            for (size_t j = 0; j < dev_pool.size(); ++j)
                dev_fitness[j] = history_[dev_pool[j]].dev_scores->at(cfg_.primary_metric_id());
        }
        size_t best = 0;
        for (size_t j = 1; j < dev_pool.size(); ++j) {
            const CandidateState& a = history_[dev_pool[j]];
            const CandidateState& b = history_[dev_pool[best]];
            if (fitness_better(dev_fitness[j], dev_fitness[best])) {
                best = j;
            } else if (dev_fitness[j] == dev_fitness[best]) {
                const double ta = train_fitness(a, train_ranks, dev_pool[j]);
                const double tb = train_fitness(b, train_ranks, dev_pool[best]);
                if (fitness_better(ta, tb) || (ta == tb && a.iteration >= b.iteration)) best = j;
            }
        }
        chosen = dev_pool[best];
        chosen_dev = dev_fitness[best];
    } else {
        chosen = best_train_index();
    }

    const CandidateState& winner = history_[chosen];
    result.best_id = winner.id;
    result.best_text = composed_text(winner.text);
    if (cfg_.mode == RunMode::ast) result.best_suffix = winner.text;
    result.best_dev_score = chosen_dev;
    result.best_train_score = train_fitness(winner, train_ranks, chosen);

    atomic_write_file(paths_.best_prompt(), result.best_text);
    if (cfg_.mode == RunMode::ast) atomic_write_file(paths_.best_suffix(), winner.text);
    return result;
}

void Engine::load_existing_records(int completed_iteration) {
    auto keep = [&](const json& r) {
        return r.value("iteration", 0) <= completed_iteration;
    };
    filter_jsonl(paths_.candidates(), keep);
    filter_jsonl(paths_.transcripts(), keep);
    filter_jsonl(paths_.dev_evals(), keep);
    if (!fs::exists(paths_.candidates())) return;

    for (const auto& r : read_jsonl(paths_.candidates())) {
        const std::string id = r.at("id").get<std::string>();
        const int index = std::stoi(id.substr(1));
        next_candidate_ = std::max(next_candidate_, index + 1);
        if (r.value("status", "") != "ok") continue;
        CandidateState c;
        c.id = id;
        c.iteration = r.at("iteration").get<int>();
        c.text = r.at("text").get<std::string>();
        for (const auto& [k, v] : r.at("train_scores").items())
            c.train_scores[k] = v.get<double>();
        c.critique = r.value("critique", "");
        c.flagged = r.value("flagged", 0);
        c.untagged = r.value("untagged", 0);
        history_normalized_.push_back(normalize_whitespace(c.text));
        history_.push_back(std::move(c));
    }
    if (!fs::exists(paths_.dev_evals()) || !fs::exists(paths_.transcripts())) return;
    for (const auto& r : read_jsonl(paths_.dev_evals())) {
        if (r.value("failed", false)) continue;
        const std::string cid = r.at("candidate_id").get<std::string>();
        for (auto& c : history_) {
            if (c.id != cid) continue;
            std::map<std::string, double> scores;
            for (const auto& [k, v] : r.at("scores").items()) scores[k] = v.get<double>();
            c.dev_scores = std::move(scores);
            if (cfg_.scoring == ScoringMode::primary_metric) {
                const double dev = c.dev_scores->at(cfg_.primary_metric_id());
                if (!best_dev_so_far_ || dev > *best_dev_so_far_) best_dev_so_far_ = dev;
            }
        }
    }
    for (const auto& r : read_jsonl(paths_.transcripts())) {
        total_prompt_tokens_ += r.value("prompt_tokens", 0L);
        total_completion_tokens_ += r.value("completion_tokens", 0L);
    }
}

OptimizeResult Engine::resume(const RunPaths& paths, const DatasetSplits& data, Gateway& gateway,
                              std::shared_ptr<EmbeddingProvider> embedder,
                              const std::optional<std::string>& expected_config_hash) {
    if (!fs::exists(paths.config()) || !fs::exists(paths.state()))
        throw DataError("no resumable run in " + paths.dir.string());

    json state;
    try {
        state = json::parse(read_file(paths.state()));
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupt run state: ") + e.what());
    }
    const OptimizationConfig cfg = config_from_json(json::parse(read_file(paths.config())));
    const std::string stored_hash = state.value("config_hash", "");
    if (stored_hash != config_hash(cfg))
        throw DataError("run state does not match config.json (integrity error)");
    if (expected_config_hash && *expected_config_hash != stored_hash)
        throw ConfigError("config mismatch: supplied config differs from the stored run config");

    if (state.value("finished", false)) {
        // completed run: return the stored result without re-executing
        const json meta = json::parse(read_file(paths.meta()));
        OptimizeResult result;
        result.run_dir = paths.dir;
        result.best_id = meta.value("best_id", "");
        result.best_text = meta.value("best_text", "");
        result.best_suffix = meta.value("best_suffix", "");
        if (meta.contains("best_dev_score"))
            result.best_dev_score = meta["best_dev_score"].get<double>();
        result.best_train_score = meta.value("best_train_score", 0.0);
        result.candidate_count = meta.value("candidate_count", 0);
        result.no_op_steps = meta.value("no_op_steps", 0);
        return result;
    }

    Engine engine(cfg, data, gateway, std::move(embedder), paths);
    const int completed = state.value("completed_iteration", -1);
    engine.no_op_steps_ = state.value("no_op_steps", 0);
    engine.load_existing_records(completed);   // also drops partial-iteration tails

    engine.candidates_out_ = std::make_unique<JsonlWriter>(paths.candidates());
    engine.transcripts_out_ = std::make_unique<JsonlWriter>(paths.transcripts());
    engine.dev_out_ = std::make_unique<JsonlWriter>(paths.dev_evals());

    if (completed < 0) {
        engine.bootstrap_seed_candidate();
        return engine.run_loop(1);
    }
    return engine.run_loop(completed + 1);
}

} // namespace crispo
