#include "crispo/cli.hpp"

#include "crispo/ast.hpp"
#include "crispo/engine.hpp"
#include "crispo/providers.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

namespace crispo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitProvider = 3;
constexpr int kExitData = 4;

RoleConfig role_config_from_json(const json& j, Role role) {
    RoleConfig cfg;
    switch (role) {
        case Role::task:
            cfg.temperature = 0.0;
            cfg.max_output_tokens = 1024;
            break;
        case Role::critique:
            cfg.temperature = 1.0;
            cfg.max_output_tokens = 1024;
            break;
        case Role::optimizer:
            cfg.temperature = 1.0;
            cfg.max_output_tokens = 2048;
            break;
    }
    if (j.is_null()) return cfg;
    cfg.provider = j.value("provider", j.contains("url") ? "http" : "replay");
    cfg.url = j.value("url", "");
    cfg.model = j.value("model", "");
    cfg.auth_env = j.value("auth_env", "");
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.max_output_tokens = j.value("max_tokens", cfg.max_output_tokens);
    if (j.contains("max_input_words")) cfg.max_input_words = j["max_input_words"].get<int>();
    cfg.timeout_seconds = j.value("timeout_seconds", cfg.timeout_seconds);
    return cfg;
}

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse config file " + path + ": " + e.what());
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
}

Gateway build_gateway(const json& config, const std::string& replay_file,
                      const std::string& record_replay) {
    Gateway gw;
    const json roles = config.value("roles", json::object());
    std::shared_ptr<ReplayProvider> replay;
    if (!replay_file.empty()) replay = ReplayProvider::from_file(replay_file);
    std::shared_ptr<ReplayRecorder> recorder;
    if (!record_replay.empty()) recorder = std::make_shared<ReplayRecorder>(record_replay);

    for (Role role : {Role::task, Role::critique, Role::optimizer}) {
        const json role_json = roles.value(to_string(role), json());
        RoleConfig rc = role_config_from_json(role_json, role);
        std::shared_ptr<Provider> provider;
        if (replay) {
            rc.provider = "replay";
            provider = replay;
        } else if (rc.provider == "http") {
            if (rc.url.empty())
                throw ConfigError("role " + to_string(role) + ": http provider needs a url");
            provider = std::make_shared<HttpChatProvider>(rc);
        } else {
            throw ConfigError("role " + to_string(role) +
                              " has no provider; pass --replay or configure roles.* in the "
                              "config file");
        }
        if (recorder) provider = std::make_shared<RecordingProvider>(provider, recorder);
        gw.set_provider(role, std::move(provider), rc);
    }

    if (config.contains("retry")) {
        RetryPolicy policy;
        const json& r = config["retry"];
        policy.max_attempts = r.value("max_attempts", 5);
        policy.base_delay = std::chrono::milliseconds(r.value("base_delay_ms", 1000L));
        policy.factor = r.value("factor", 2.0);
        gw.set_retry_policy(policy);
    }
    return gw;
}

std::string default_seed_prompt(TaskKind kind) {
    return kind == TaskKind::summarization ? "Generate a summary for the input text"
                                           : "Answer the question using the context provided";
}

// Seeds without the required placeholder get it appended (fixed layout shape);
// other violations are configuration errors.
std::string normalize_seed_prompt(const std::string& seed, const OptimizationConfig& cfg) {
    if (!cfg.flags.use_flexible_template) {
        if (seed.find("INSERT_") != std::string::npos)
            throw ConfigError("fixed-layout runs take a plain instruction without placeholders");
        return seed;
    }
    TemplateValidation v = validate_template(seed, cfg.task_kind);
    if (v.ok()) return seed;
    const std::string required(cfg.task_kind == TaskKind::summarization ? kInputPlaceholder
                                                                        : kQuestionPlaceholder);
    if (v.violations.size() == 1 &&
        v.violations.front() == "missing required placeholder " + required) {
        return seed + "\n\n" + required;
    }
    std::string msg = "seed prompt does not validate:";
    for (const auto& viol : v.violations) msg += " " + viol + ";";
    throw ConfigError(msg);
}

void apply_ablations(OptimizationConfig& cfg, bool opro, const std::vector<std::string>& ablate) {
    if (opro) cfg.flags = AblationFlags::opro();
    for (const auto& a : ablate) {
        if (a == "no-critique") cfg.flags.use_critique = false;
        else if (a == "no-cot") cfg.flags.use_cot = false;
        else if (a == "no-template") cfg.flags.use_flexible_template = false;
        else if (a == "no-aspect") cfg.critique_variant = CritiqueVariant::Kind::no_aspect;
        else if (a == "predefined-aspects")
            cfg.critique_variant = CritiqueVariant::Kind::predefined_aspects;
        else throw ConfigError("unknown ablation: " + a);
    }
}

void write_json_mirror(const std::string& path, const json& j) {
    if (path.empty()) return;
    atomic_write_file(path, j.dump(2) + "\n");
}

void print_result(const OptimizeResult& result, const OptimizationConfig& cfg,
                  const std::string& out_json) {
    std::cout << "best prompt (" << result.best_id << "):\n" << result.best_text << "\n";
    if (!result.best_suffix.empty())
        std::cout << "tuned suffix:\n" << result.best_suffix << "\n";
    if (result.best_dev_score) {
        std::cout << (cfg.scoring == ScoringMode::rank_aggregate ? "dev average rank: "
                                                                 : "dev score: ")
                  << *result.best_dev_score << "\n";
    } else {
        std::cout << "dev score: n/a (no dev evaluation ran; train score "
                  << result.best_train_score << ")\n";
    }
    std::cout << "candidates evaluated: " << result.candidate_count << "\n";
    std::cout << "run dir: " << result.run_dir.string() << "\n";

    json j;
    j["best_id"] = result.best_id;
    j["best_prompt"] = result.best_text;
    if (!result.best_suffix.empty()) j["best_suffix"] = result.best_suffix;
    if (result.best_dev_score) j["best_dev_score"] = *result.best_dev_score;
    j["best_train_score"] = result.best_train_score;
    j["candidate_count"] = result.candidate_count;
    j["no_op_steps"] = result.no_op_steps;
    j["run_dir"] = result.run_dir.string();
    write_json_mirror(out_json, j);
}

struct CommonArgs {
    std::string config_file;
    std::string dataset_dir;
    std::string replay_file;
    std::string record_replay;
    std::string out_json;
};

OptimizationConfig engine_config(const json& config_json) {
    return config_from_json(config_json);
}

DatasetSplits load_data(const CommonArgs& args, const OptimizationConfig& cfg) {
    SplitSizes sizes{cfg.train_size, cfg.dev_size, cfg.test_size};
    return load_dataset(args.dataset_dir, cfg.task_kind, sizes, cfg.seed);
}

int cmd_optimize(const CommonArgs& args, const std::string& out_dir,
                 const std::string& seed_prompt_arg, const std::string& seed_prompt_file,
                 bool resume, bool opro, const std::vector<std::string>& ablate) {
    const json config_json = load_config_file(args.config_file);
    OptimizationConfig cfg = engine_config(config_json);
    apply_ablations(cfg, opro, ablate);

    std::string seed = seed_prompt_arg;
    if (!seed_prompt_file.empty()) seed = read_file(seed_prompt_file);
    if (seed.empty()) seed = default_seed_prompt(cfg.task_kind);
    cfg.seed_prompt = normalize_seed_prompt(seed, cfg);

    Gateway gateway = build_gateway(config_json, args.replay_file, args.record_replay);
    auto embedder = std::make_shared<HashedNgramEmbedder>();
    RunPaths paths{out_dir};

    OptimizeResult result;
    if (resume) {
        const DatasetSplits data = load_data(args, cfg);
        std::optional<std::string> expected;
        if (!args.config_file.empty()) expected = config_hash(cfg);
        result = Engine::resume(paths, data, gateway, embedder, expected);
        print_result(result, cfg, args.out_json);
        return kExitOk;
    }

    if (fs::exists(paths.state()))
        throw ConfigError("run directory already holds a run; pass --resume to continue it");
    DatasetSplits data = load_data(args, cfg);
    Engine engine(cfg, std::move(data), gateway, embedder, paths);
    result = engine.run();
    print_result(result, cfg, args.out_json);
    return kExitOk;
}

int cmd_evaluate(const CommonArgs& args, const std::string& prompt_file, const std::string& split,
                 const std::string& metrics_csv) {
    const json config_json = load_config_file(args.config_file);
    OptimizationConfig cfg = engine_config(config_json);
    if (!metrics_csv.empty()) {
        cfg.metric_ids.clear();
        std::stringstream ss(metrics_csv);
        std::string id;
        while (std::getline(ss, id, ',')) cfg.metric_ids.push_back(id);
    }
    std::string prompt;
    try {
        prompt = read_file(prompt_file);
    } catch (const DataError&) {
        throw DataError("cannot read prompt file: " + prompt_file);
    }
    // trim one trailing newline so saved best_prompt.txt round-trips
    if (!prompt.empty() && prompt.back() == '\n') prompt.pop_back();
    cfg.seed_prompt = normalize_seed_prompt(prompt, cfg);

    DatasetSplits data = load_data(args, cfg);
    const std::vector<Example>* eval_split = nullptr;
    if (split == "train") eval_split = &data.train;
    else if (split == "dev") eval_split = &data.dev;
    else if (split == "test") eval_split = &data.test;
    else throw ConfigError("unknown split: " + split);
    if (eval_split->empty()) throw DataError("split '" + split + "' is empty");

    Gateway gateway = build_gateway(config_json, args.replay_file, args.record_replay);
    auto embedder = std::make_shared<HashedNgramEmbedder>();

    // throwaway engine: evaluation reuses its rendering/scoring path
    OptimizationConfig eval_cfg = cfg;
    eval_cfg.critique_examples = 1;
    eval_cfg.io_examples = 0;
    eval_cfg.iterations = 0;
    eval_cfg.dev_eval_every = 1;
    DatasetSplits eval_data = data;
    if (eval_data.dev.empty()) eval_data.dev = *eval_split;
    Engine engine(eval_cfg, eval_data, gateway, embedder, RunPaths{fs::temp_directory_path()});
    const EvalResult result =
        engine.evaluate_candidate(cfg.seed_prompt, *eval_split, 0, "evaluate", "eval");

    json mirror;
    mirror["split"] = split;
    mirror["examples"] = eval_split->size();
    mirror["flagged"] = result.flagged;
    mirror["untagged"] = result.untagged;
    mirror["failed"] = result.failed;
    mirror["aggregates"] = result.aggregates;

    std::printf("%-14s %s\n", "metric", "score");
    for (const auto& [id, value] : result.aggregates)
        std::printf("%-14s %.6f\n", id.c_str(), value);
    std::printf("flagged %d, untagged %d\n", result.flagged, result.untagged);
    write_json_mirror(args.out_json, mirror);
    return result.failed ? kExitProvider : kExitOk;
}

int cmd_ast(const CommonArgs& args, const std::string& out_dir, const std::string& main_prompt_file,
            const std::string& seed_suffix, const std::string& metrics_csv, bool full_tune) {
    const json config_json = load_config_file(args.config_file);
    OptimizationConfig cfg = engine_config(config_json);
    if (!metrics_csv.empty()) {
        cfg.metric_ids.clear();
        std::stringstream ss(metrics_csv);
        std::string id;
        while (std::getline(ss, id, ',')) cfg.metric_ids.push_back(id);
    }
    if (cfg.metric_ids.size() < 2)
        throw ConfigError("suffix tuning needs --metrics with at least two metric ids "
                          "(e.g. --metrics rouge-1,external:<url>)");

    std::string main_prompt = read_file(main_prompt_file);
    if (!main_prompt.empty() && main_prompt.back() == '\n') main_prompt.pop_back();
    const std::string suffix = seed_suffix.empty() ? std::string(kDefaultSeedSuffix) : seed_suffix;

    Gateway gateway = build_gateway(config_json, args.replay_file, args.record_replay);
    auto embedder = std::make_shared<HashedNgramEmbedder>();
    DatasetSplits data = load_data(args, cfg);
    RunPaths paths{out_dir};

    const OptimizeResult result =
        full_tune ? full_tune_baseline(main_prompt, suffix, cfg, std::move(data), gateway,
                                       embedder, paths)
                  : tune_suffix(main_prompt, suffix, cfg, std::move(data), gateway, embedder,
                                paths);
    cfg.scoring = ScoringMode::rank_aggregate;
    print_result(result, cfg, args.out_json);
    return kExitOk;
}

int cmd_report(const std::string& run_dir, const std::string& out_json) {
    RunPaths paths{run_dir};
    if (!fs::exists(paths.candidates()))
        throw DataError("no candidates.jsonl in " + run_dir);

    std::vector<std::string> prompts;
    int iterations = 0;
    for (const auto& r : read_jsonl(paths.candidates())) {
        if (r.value("status", "") != "ok") continue;
        prompts.push_back(r.at("text").get<std::string>());
        iterations = std::max(iterations, r.value("iteration", 0));
    }
    if (prompts.size() < 2)
        throw DataError("diversity report needs at least 2 evaluated candidates");

    HashedNgramEmbedder embedder;
    const DiversityStats stats = diversity_report(prompts, embedder);
    const std::string csv = diversity_csv(stats);
    atomic_write_file(paths.diversity(), csv);

    std::cout << "trajectory: " << prompts.size() << " evaluated candidates over " << iterations
              << " iterations\n";
    std::cout << csv;
    std::cout << "diversity csv: " << paths.diversity().string() << "\n";

    json j;
    j["prompt_count"] = stats.prompt_count;
    j["len_mean"] = stats.len_mean;
    j["len_std"] = stats.len_std;
    j["vocab"] = stats.vocab;
    j["rougeL_mean"] = stats.rouge_l_mean;
    j["cosine_mean"] = stats.cosine_mean;
    j["iterations"] = iterations;
    write_json_mirror(out_json, j);
    return kExitOk;
}

int cmd_replay_record(const std::string& run_dir, const std::string& out_file) {
    RunPaths paths{run_dir};
    if (!fs::exists(paths.transcripts()))
        throw DataError("no transcripts.jsonl in " + run_dir);
    ReplayRecorder recorder(out_file);
    long recorded = 0;
    for (const auto& r : read_jsonl(paths.transcripts())) {
        if (r.contains("error")) continue;
        recorder.record(role_from_string(r.at("role").get<std::string>()),
                        r.at("prompt").get<std::string>(),
                        r.at("completion").get<std::string>());
        ++recorded;
    }
    std::cout << "recorded " << recorded << " transcripts into " << out_file << "\n";
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Prompt optimization engine (critique-guided search with suffix tuning)"};
    app.require_subcommand(1);

    CommonArgs common;

    // optimize
    auto* optimize = app.add_subcommand("optimize", "Run the optimization loop");
    std::string out_dir, seed_prompt, seed_prompt_file;
    bool resume = false, opro = false;
    std::vector<std::string> ablate;
    optimize->add_option("--config", common.config_file, "Engine/provider config JSON");
    optimize->add_option("--dataset", common.dataset_dir, "Dataset directory")->required();
    optimize->add_option("--out", out_dir, "Run directory")->required();
    optimize->add_option("--seed-prompt", seed_prompt, "Seed prompt text");
    optimize->add_option("--seed-prompt-file", seed_prompt_file, "Seed prompt file");
    optimize->add_flag("--resume", resume, "Continue an interrupted run");
    optimize->add_flag("--opro", opro, "Baseline mode: all ablation flags off");
    optimize->add_option("--ablate", ablate,
                         "Comma-free list: no-critique no-cot no-template no-aspect "
                         "predefined-aspects")
        ->delimiter(',');
    optimize->add_option("--replay", common.replay_file, "Replay transcript file");
    optimize->add_option("--record-replay", common.record_replay,
                         "Record live transcripts into a replay file");
    optimize->add_option("--out-json", common.out_json, "Machine-readable result file");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Score a fixed prompt on a split");
    std::string prompt_file, split = "test", metrics_csv;
    evaluate->add_option("--config", common.config_file, "Engine/provider config JSON");
    evaluate->add_option("--prompt-file", prompt_file, "Prompt file")->required();
    evaluate->add_option("--dataset", common.dataset_dir, "Dataset directory")->required();
    evaluate->add_option("--split", split, "train|dev|test (default test)");
    evaluate->add_option("--metrics", metrics_csv, "Comma-separated metric ids");
    evaluate->add_option("--replay", common.replay_file, "Replay transcript file");
    evaluate->add_option("--record-replay", common.record_replay,
                         "Record live transcripts into a replay file");
    evaluate->add_option("--out-json", common.out_json, "Machine-readable result file");

    // ast
    auto* ast = app.add_subcommand("ast", "Tune a suffix for a frozen main prompt");
    std::string main_prompt_file, seed_suffix;
    bool full_tune = false;
    ast->add_option("--config", common.config_file, "Engine/provider config JSON");
    ast->add_option("--dataset", common.dataset_dir, "Dataset directory")->required();
    ast->add_option("--out", out_dir, "Run directory")->required();
    ast->add_option("--main-prompt", main_prompt_file, "Frozen main prompt file")->required();
    ast->add_option("--seed-suffix", seed_suffix,
                    "Seed suffix (defaults to the faithfulness suffix)");
    ast->add_option("--metrics", metrics_csv, "Comma-separated metric ids (>= 2)");
    ast->add_flag("--full-tune", full_tune, "Baseline: tune main prompt and suffix together");
    ast->add_option("--replay", common.replay_file, "Replay transcript file");
    ast->add_option("--record-replay", common.record_replay,
                    "Record live transcripts into a replay file");
    ast->add_option("--out-json", common.out_json, "Machine-readable result file");

    // report
    auto* report = app.add_subcommand("report", "Diversity stats and trajectory summary");
    std::string run_dir;
    report->add_option("--run-dir", run_dir, "Run directory")->required();
    report->add_option("--out-json", common.out_json, "Machine-readable result file");

    // replay-record
    auto* rr = app.add_subcommand("replay-record",
                                  "Convert run transcripts into a keyed replay file");
    std::string rr_out;
    rr->add_option("--run-dir", run_dir, "Run directory")->required();
    rr->add_option("--out", rr_out, "Replay file to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (optimize->parsed())
            return cmd_optimize(common, out_dir, seed_prompt, seed_prompt_file, resume, opro,
                                ablate);
        if (evaluate->parsed()) return cmd_evaluate(common, prompt_file, split, metrics_csv);
        if (ast->parsed())
            return cmd_ast(common, out_dir, main_prompt_file, seed_suffix, metrics_csv, full_tune);
        if (report->parsed()) return cmd_report(run_dir, common.out_json);
        if (rr->parsed()) return cmd_replay_record(run_dir, rr_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ProviderError& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}

} // namespace crispo
