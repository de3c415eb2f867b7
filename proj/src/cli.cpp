#include "sisom/cli.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "sisom/config.hpp"
#include "sisom/run_dir.hpp"

namespace sisom {

namespace {

using nlohmann::json;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
    std::int64_t seed = -1;   // -1: keep the config's seed
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file (JSON)")
        ->required();
    cmd->add_option("--out-dir", args.out_dir, "run output directory")->required();
    cmd->add_option("--override", args.overrides,
                    "config override as key.path=value (repeatable)");
    cmd->add_option("--seed", args.seed, "override the config seed");
}

struct LoadedRun {
    json doc;
    ExperimentConfig config;
    std::string hash;
};

LoadedRun load_run(const CommonArgs& args) {
    LoadedRun run;
    run.doc = load_config_file(args.config_path);
    for (const std::string& o : args.overrides) apply_override(run.doc, o);
    if (args.seed >= 0) run.doc["seed"] = static_cast<std::uint64_t>(args.seed);
    run.config = parse_config(run.doc);
    run.hash = config_hash(run.doc);
    return run;
}

json row_to_json(const MetricsRow& row) {
    json j;
    j["scorer"] = row.scorer;
    j["checkpoint"] = row.checkpoint;
    j["set"] = row.set;
    j["tag"] = row.tag;
    if (row.error.empty()) {
        j["auroc"] = row.auroc;
        j["fpr95"] = row.fpr95;
    } else {
        j["error"] = row.error;
    }
    j["n_ind"] = row.n_ind;
    j["n_ood"] = row.n_ood;
    return j;
}

json metrics_to_json(const BenchmarkResult& result, const ExperimentConfig& config,
                     const std::string& hash) {
    json j;
    j["scorer_mode"] = score_mode_name(config.scorer.mode);
    // Direction convention: which bundle field acts as the InD confidence.
    j["ind_score"] = config.scorer.mode == ScoreMode::Sisom    ? "r_ood"
                     : config.scorer.mode == ScoreMode::Sisome ? "-fused"
                                                               : "-energy";
    j["config_hash"] = hash;
    j["r_avg"] = std::isnan(result.r_avg_used) ? json() : json(result.r_avg_used);
    json rows = json::array();
    for (const MetricsRow& row : result.rows) rows.push_back(row_to_json(row));
    j["rows"] = rows;
    return j;
}

std::string ids_to_text(const std::vector<std::string>& ids) {
    std::ostringstream out;
    for (const std::string& id : ids) out << id << '\n';
    return out.str();
}

ALConfig al_config_from(const ExperimentConfig& config, std::size_t n_capture) {
    if (!config.al) throw ConfigError("this command needs an 'al' section in the config");
    ALConfig al;
    al.initial_size = config.al->initial_size;
    al.query_size = config.al->query_size;
    al.cycles = config.al->cycles;
    al.strategy = config.al->strategy;
    al.train = config.train;
    al.seed = config.seed;
    al.hidden = config.model.hidden;
    al.capture = config.model.capture;
    al.steepness = config.steepness_or_default(n_capture);
    al.r_avg_override = config.scorer.r_avg_override;
    al.subset = config.subset;
    al.stored_class = config.scorer.stored_class;
    al.standardize_fusion = config.scorer.standardize_fusion;
    return al;
}

struct AlOutputs {
    ALRun run;
    GeneratedData data;
};

AlOutputs run_al(const ExperimentConfig& config, RunDir& dir) {
    AlOutputs out;
    out.data = generate_datasets(config);
    if (out.data.test.size() == 0) throw ConfigError("al-run: config needs a test split");
    const ALConfig al = al_config_from(config, config.model.capture.size());
    out.run = run_cycles(out.data.train, out.data.test, al);

    dir.write("curves/curve.csv", curve_to_csv(out.run, al.strategy, config.seed));
    for (std::size_t i = 0; i < out.run.rows.size(); ++i) {
        dir.write("curves/labeled_ids_cycle_" + std::to_string(i) + ".txt",
                  ids_to_text(out.run.labeled_ids_per_cycle[i]));
        if (i > 0)
            dir.write("curves/queried_cycle_" + std::to_string(i) + ".txt",
                      ids_to_text(out.run.rows[i].queried_ids));
    }
    for (std::size_t i = 0; i < out.run.checkpoints.size(); ++i)
        dir.write("checkpoints/cycle_" + std::to_string(i + 1) + ".model",
                  model_to_text(out.run.checkpoints[i]));
    return out;
}

void write_benchmark(const BenchmarkResult& result, const ExperimentConfig& config,
                     const std::string& hash, const std::string& metrics_name, RunDir& dir) {
    dir.write("metrics/" + metrics_name, metrics_to_json(result, config, hash).dump(2) + "\n");
    for (const SetHistogram& hist : result.histograms) {
        const std::string sub =
            hist.checkpoint == "model" ? "" : hist.checkpoint + "/";
        dir.write("metrics/" + sub + "hist_" + hist.set + ".csv", histogram_to_csv(hist));
    }
}

int cmd_gen_data(const LoadedRun& run, RunDir& dir) {
    const GeneratedData data = generate_datasets(run.config);
    dir.write("data/train.csv", to_csv(data.train));
    if (data.test.size() > 0) dir.write("data/test.csv", to_csv(data.test));
    for (const OodSet& set : generate_ood_sets(run.config, data.train))
        dir.write("data/ood_" + set.name + ".csv", to_csv(set.data));
    return 0;
}

int cmd_train(const LoadedRun& run, RunDir& dir) {
    const GeneratedData data = generate_datasets(run.config);
    MlpModel model = train_fresh_model(run.config, data.train);
    dir.write("checkpoints/model.txt", model_to_text(model));
    json metrics;
    metrics["train_accuracy"] = accuracy(model, data.train.features, *data.train.labels);
    if (data.test.size() > 0)
        metrics["test_accuracy"] = accuracy(model, data.test.features, *data.test.labels);
    metrics["config_hash"] = run.hash;
    dir.write("metrics/train.json", metrics.dump(2) + "\n");
    return 0;
}

int cmd_score(const LoadedRun& run, RunDir& dir, const std::string& queries_path) {
    const GeneratedData data = generate_datasets(run.config);
    const MlpModel model = obtain_model(run.config, data.train);
    const SteepnessConfig steepness =
        run.config.steepness_or_default(model.capture_layers().size());

    ComparisonSet set = ComparisonSet::build(model, data.train, steepness);
    if (run.config.subset.enabled)
        set = set.reduce(run.config.subset.fraction, run.config.subset.radius);

    Dataset queries;
    if (!queries_path.empty()) {
        queries = load_csv(queries_path);
    } else if (data.test.size() > 0) {
        queries = data.test;
    } else {
        throw ConfigError("score: no queries (config has no test split; pass --queries)");
    }

    const BatchScores scores =
        score_batch(model, steepness, set, queries, run.config.scorer.mode,
                    run.config.scorer.r_avg_override, run.config.scorer.stored_class,
                    run.config.scorer.standardize_fusion);
    dir.write("metrics/scores.csv", scores_to_csv(scores.bundles));
    json meta;
    meta["r_avg"] = std::isnan(scores.r_avg_used) ? json() : json(scores.r_avg_used);
    meta["config_hash"] = run.hash;
    meta["scorer_mode"] = score_mode_name(run.config.scorer.mode);
    meta["comparison_set_size"] = set.size();
    meta["reduced"] = set.reduced();
    dir.write("metrics/scores_meta.json", meta.dump(2) + "\n");
    return 0;
}

int cmd_subset(const LoadedRun& run, RunDir& dir) {
    const GeneratedData data = generate_datasets(run.config);
    const MlpModel model = obtain_model(run.config, data.train);
    const SteepnessConfig steepness =
        run.config.steepness_or_default(model.capture_layers().size());

    const ComparisonSet full = ComparisonSet::build(model, data.train, steepness);
    const ComparisonSet reduced =
        full.reduce(run.config.subset.fraction, run.config.subset.radius);

    dir.write("metrics/subset.csv", reduced.to_csv());
    json meta;
    meta["full_size"] = full.size();
    meta["reduced_size"] = reduced.size();
    meta["fraction"] = run.config.subset.fraction;
    json sizes = json::array();
    for (const auto& members : reduced.class_index()) sizes.push_back(members.size());
    meta["per_class_sizes"] = sizes;
    meta["config_hash"] = run.hash;
    dir.write("metrics/subset_meta.json", meta.dump(2) + "\n");
    return 0;
}

int cmd_optimize_steepness(const LoadedRun& run, RunDir& dir) {
    if (!run.config.steepness_search)
        throw ConfigError("optimize-steepness: config needs steepness.search");
    const GeneratedData data = generate_datasets(run.config);
    const MlpModel model = obtain_model(run.config, data.train);
    const SteepnessResult result = optimize_steepness(
        model, data.train, *run.config.steepness_search, run.config.scorer.stored_class);

    dir.write("metrics/steepness_table.csv", steepness_table_to_csv(result.table));
    json best;
    best["alpha"] = result.best.alpha;
    best["r_avg"] = result.best_r_avg;
    best["evaluated"] = result.table.size();
    best["config_hash"] = run.hash;
    dir.write("metrics/steepness_best.json", best.dump(2) + "\n");
    return 0;
}

int cmd_al_run(const LoadedRun& run, RunDir& dir) {
    run_al(run.config, dir);
    return 0;
}

ScorerSetup scorer_setup_from(const ExperimentConfig& config) {
    ScorerSetup setup;
    setup.mode = config.scorer.mode;
    setup.steepness = config.steepness_or_default(config.model.capture.size());
    setup.subset = config.subset;
    setup.r_avg_override = config.scorer.r_avg_override;
    setup.stored_class = config.scorer.stored_class;
    setup.standardize_fusion = config.scorer.standardize_fusion;
    return setup;
}

int cmd_ood_eval(const LoadedRun& run, RunDir& dir) {
    if (run.config.ood_sets.empty())
        throw ConfigError("ood-eval: config needs an 'ood' section");
    const GeneratedData data = generate_datasets(run.config);
    if (data.test.size() == 0)
        throw ConfigError("ood-eval: config needs a test split for the InD evaluation set");

    std::vector<CheckpointInput> checkpoints;
    checkpoints.push_back({"model", obtain_model(run.config, data.train), data.train});
    const BenchmarkResult result =
        run_benchmark(checkpoints, data.test, generate_ood_sets(run.config, data.train),
                      scorer_setup_from(run.config));
    write_benchmark(result, run.config, run.hash, "ood_metrics.json", dir);
    return 0;
}

int cmd_life_cycle(const LoadedRun& run, RunDir& dir) {
    if (run.config.ood_sets.empty())
        throw ConfigError("life-cycle: config needs an 'ood' section");
    const AlOutputs al = run_al(run.config, dir);

    std::vector<CheckpointInput> checkpoints;
    std::map<std::string, std::size_t> index_of_id;
    for (std::size_t i = 0; i < al.data.train.size(); ++i)
        index_of_id[al.data.train.ids[i]] = i;
    for (std::size_t c = 0; c < al.run.checkpoints.size(); ++c) {
        std::vector<std::size_t> rows;
        for (const std::string& id : al.run.labeled_ids_per_cycle[c + 1])
            rows.push_back(index_of_id.at(id));
        checkpoints.push_back({"cycle_" + std::to_string(c + 1), al.run.checkpoints[c],
                               al.data.train.subset(rows)});
    }

    const BenchmarkResult result =
        run_benchmark(checkpoints, al.data.test, generate_ood_sets(run.config, al.data.train),
                      scorer_setup_from(run.config));
    write_benchmark(result, run.config, run.hash, "life_cycle_metrics.json", dir);
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Unified active-learning and out-of-distribution scoring engine"};
    app.require_subcommand(1);

    struct Sub {
        CLI::App* cmd;
        CommonArgs args;
    };
    std::map<std::string, Sub> subs;
    for (const char* name : {"gen-data", "train", "score", "al-run", "ood-eval",
                             "optimize-steepness", "subset", "life-cycle"}) {
        Sub sub;
        sub.cmd = app.add_subcommand(name);
        subs[name] = sub;
    }
    subs["gen-data"].cmd->description("generate dataset CSVs from the config");
    subs["train"].cmd->description("train the classifier and save a checkpoint");
    subs["score"].cmd->description("score queries against the labeled comparison set");
    subs["al-run"].cmd->description("run active-learning cycles");
    subs["ood-eval"].cmd->description("run the OOD detection benchmark");
    subs["optimize-steepness"].cmd->description("grid-search sigmoid steepness");
    subs["subset"].cmd->description("reduce the comparison set by greedy coverage");
    subs["life-cycle"].cmd->description("al-run followed by ood-eval on every checkpoint");

    for (auto& [name, sub] : subs) add_common(sub.cmd, sub.args);
    std::string queries_path;
    subs["score"].cmd->add_option("--queries", queries_path,
                                  "CSV of samples to score (default: the test split)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n' << app.help() << std::flush;
        return 1;
    }

    const auto started = std::chrono::steady_clock::now();
    try {
        for (auto& [name, sub] : subs) {
            if (!sub.cmd->parsed()) continue;
            const LoadedRun run = load_run(sub.args);
            RunDir dir(sub.args.out_dir);
            dir.write("config.snapshot", run.doc.dump(2) + "\n");

            int rc = 0;
            if (name == "gen-data") rc = cmd_gen_data(run, dir);
            else if (name == "train") rc = cmd_train(run, dir);
            else if (name == "score") rc = cmd_score(run, dir, queries_path);
            else if (name == "al-run") rc = cmd_al_run(run, dir);
            else if (name == "ood-eval") rc = cmd_ood_eval(run, dir);
            else if (name == "optimize-steepness") rc = cmd_optimize_steepness(run, dir);
            else if (name == "subset") rc = cmd_subset(run, dir);
            else if (name == "life-cycle") rc = cmd_life_cycle(run, dir);

            const double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                    .count();
            dir.finalize(run.hash, run.config.seed, wall);
            return rc;
        }
        std::cerr << "no subcommand given\n" << app.help();
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace sisom
