// Command-line front end: data generation, features, label trees, training,
// evaluation, experiment runs, and disagreement analysis.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "e2eg/baselines.hpp"
#include "e2eg/errors.hpp"
#include "e2eg/experiment.hpp"
#include "e2eg/hlt.hpp"
#include "e2eg/metrics.hpp"
#include "e2eg/trainer.hpp"

namespace fs = std::filesystem;
using namespace e2eg;

namespace {

struct GlobalFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<int> delay_rounds;
    bool extra_round = false;
    std::optional<std::string> out_dir;
};

ExperimentConfig resolve_config(const GlobalFlags& flags) {
    ExperimentConfig config = flags.config_path.empty() ? ExperimentConfig{} : load_config(flags.config_path);
    if (flags.seed) config.seeds = {*flags.seed};
    if (flags.mode) config.train.mode = parse_mode(*flags.mode);
    if (flags.delay_rounds) config.train.delay_rounds = *flags.delay_rounds;
    if (flags.extra_round) config.train.extra_round = true;
    if (flags.out_dir) config.out_dir = *flags.out_dir;
    config.validate();
    return config;
}

fs::path out_dir_or_cwd(const ExperimentConfig& config) {
    fs::path dir = config.out_dir.empty() ? fs::path(".") : fs::path(config.out_dir);
    fs::create_directories(dir);
    return dir;
}

void print_accuracies(const std::vector<int>& preds, const TextGraph& graph) {
    std::printf("train_acc %.6f\nvalid_acc %.6f\ntest_acc %.6f\n", split_accuracy(preds, graph, Split::train),
                split_accuracy(preds, graph, Split::valid), split_accuracy(preds, graph, Split::test));
}

std::vector<std::vector<int>> run_seeds(ModelKind kind, const PreparedGraph& data, const ExperimentConfig& config) {
    std::vector<std::vector<int>> out;
    for (const auto seed : config.seeds) {
        TrainConfig tc = config.train;
        tc.seed = seed;
        out.push_back(train_kind(kind, data, tc).predictions);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"End-to-end multi-task node classification on text-attributed graphs"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "Flat key = value config file")->check(CLI::ExistingFile);
    app.add_option("--seed", flags.seed, "Run a single seed instead of the config's seed list");
    app.add_option("--mode", flags.mode, "transductive or inductive")
        ->check(CLI::IsMember({"transductive", "inductive"}));
    app.add_option("--delay-rounds", flags.delay_rounds, "Curriculum rounds without the main loss");
    app.add_flag("--extra-round", flags.extra_round, "Finish with a frozen-encoder classification round");
    app.add_option("--out-dir", flags.out_dir, "Directory for generated artifacts");

    auto* gen = app.add_subcommand("gen-synth", "Generate and split a planted-partition graph");

    auto* featurize = app.add_subcommand("featurize", "Write TF-IDF features as `rows cols nnz` + triples");
    std::string features_out;
    featurize->add_option("--output", features_out, "Output path (default <out-dir>/tfidf.txt)");

    auto* hlt_cmd = app.add_subcommand("build-hlt", "Cluster nodes into a hierarchical label tree");
    std::string hlt_out;
    hlt_cmd->add_option("--output", hlt_out, "Output path (default <out-dir>/hlt.txt)");

    auto* train = app.add_subcommand("train", "Train one model kind for one seed");
    std::string train_kind_name = "e2eg";
    train->add_option("--kind", train_kind_name, "e2eg, text_only, degree_mlp, or two_stage")
        ->check(CLI::IsMember({"e2eg", "text_only", "degree_mlp", "two_stage"}));

    auto* eval = app.add_subcommand("eval", "Evaluate a saved checkpoint on the configured graph");
    std::string checkpoint_path;
    eval->add_option("--checkpoint", checkpoint_path, "Checkpoint written by train or run")
        ->required()
        ->check(CLI::ExistingFile);

    auto* compare = app.add_subcommand("compare", "Compare two model kinds in a results.csv");
    std::string results_path, kind_a = "e2eg", kind_b = "text_only";
    compare->add_option("--results", results_path, "Result table CSV")->required()->check(CLI::ExistingFile);
    compare->add_option("--a", kind_a, "First model kind");
    compare->add_option("--b", kind_b, "Second model kind");

    auto* explain = app.add_subcommand("explain", "Nodes on which two models consistently disagree across seeds");
    std::string explain_a = "e2eg", explain_b = "text_only", explain_split = "test", explain_out;
    explain->add_option("--a", explain_a, "First model kind");
    explain->add_option("--b", explain_b, "Second model kind");
    explain->add_option("--split", explain_split, "train, valid, or test")
        ->check(CLI::IsMember({"train", "valid", "test"}));
    explain->add_option("--output", explain_out, "JSON report path (default <out-dir>/explain.json)");

    auto* run = app.add_subcommand("run", "Full experiment over all configured kinds and seeds");

    CLI11_PARSE(app, argc, argv);

    try {
        const ExperimentConfig config = resolve_config(flags);

        if (gen->parsed()) {
            if (!config.synthetic()) throw ConfigError("gen-synth needs a synthetic config (no nodes_path)");
            const auto dir = out_dir_or_cwd(config);
            const auto graph =
                split_nodes(generate_synthetic(config.synth, config.synth_seed), config.split_ratios, config.split_seed);
            save_graph(graph, dir / "nodes.tsv", dir / "edges.tsv");
            std::printf("wrote %zu nodes, %zu edges to %s\n", graph.size(), graph.adjacency().nnz() / 2,
                        dir.string().c_str());
        } else if (featurize->parsed()) {
            const auto data = load_experiment_data(config);
            const fs::path path = features_out.empty() ? out_dir_or_cwd(config) / "tfidf.txt" : fs::path(features_out);
            std::ofstream out(path);
            data.tfidf.write_text(out);
            std::printf("wrote %zu x %zu TF-IDF matrix (%zu nonzeros) to %s\n", data.tfidf.rows(), data.tfidf.cols(),
                        data.tfidf.nnz(), path.string().c_str());
        } else if (hlt_cmd->parsed()) {
            const auto data = load_experiment_data(config);
            const auto seed = derive_seed(config.seeds.front(), 900);
            const auto hlt = build_hlt(data.tfidf, config.train.branching, config.train.depth, seed);
            const fs::path path = hlt_out.empty() ? out_dir_or_cwd(config) / "hlt.txt" : fs::path(hlt_out);
            std::ofstream out(path);
            hlt.write_text(out);
            std::printf("wrote depth-%d label tree to %s\n", hlt.depth(), path.string().c_str());
        } else if (train->parsed()) {
            const auto data = load_experiment_data(config);
            const auto kind = parse_model_kind(train_kind_name);
            TrainConfig tc = config.train;
            tc.seed = config.seeds.front();
            const auto result = train_kind(kind, data, tc);
            const auto dir = out_dir_or_cwd(config);
            const std::string stem = train_kind_name + "_seed" + std::to_string(tc.seed);
            std::ofstream hist(dir / (stem + "_history.csv"));
            result.history.write_csv(hist);
            if (result.checkpoint) save_checkpoint(*result.checkpoint, dir / (stem + ".ckpt"));
            print_accuracies(result.predictions, data.graph);
        } else if (eval->parsed()) {
            const auto data = load_experiment_data(config);
            const auto state = load_checkpoint(checkpoint_path);
            if (state.encoder.vocab_size() != data.vocab.size())
                throw ConfigError("checkpoint vocabulary size does not match the configured data");
            print_accuracies(predict_all(state, data), data.graph);
        } else if (compare->parsed()) {
            std::ifstream in(results_path);
            const auto table = ResultTable::read_csv(in);
            const auto a = parse_model_kind(kind_a);
            const auto b = parse_model_kind(kind_b);
            const auto acc_a = table.test_accuracies(a);
            const auto acc_b = table.test_accuracies(b);
            if (acc_a.empty() || acc_b.empty()) throw ConfigError("compare: both kinds need successful runs");
            const auto agg_a = aggregate(acc_a);
            const auto agg_b = aggregate(acc_b);
            std::printf("kind,runs,test_mean,test_std,test_median\n");
            std::printf("%s,%zu,%.6f,%.6f,%.6f\n", kind_a.c_str(), acc_a.size(), agg_a.mean, agg_a.stddev, median(acc_a));
            std::printf("%s,%zu,%.6f,%.6f,%.6f\n", kind_b.c_str(), acc_b.size(), agg_b.mean, agg_b.stddev, median(acc_b));
            std::printf("delta_mean_points %.3f\ndelta_median_points %.3f\n", 100.0 * (agg_a.mean - agg_b.mean),
                        100.0 * (median(acc_a) - median(acc_b)));
        } else if (explain->parsed()) {
            const auto data = load_experiment_data(config);
            const auto a = parse_model_kind(explain_a);
            const auto b = parse_model_kind(explain_b);
            const auto preds_a = run_seeds(a, data, config);
            const auto preds_b = run_seeds(b, data, config);
            const auto subset = data.graph.nodes_in(parse_split(explain_split));
            const auto report = disagreement_samples(preds_a, preds_b, data.graph, subset);
            const fs::path path = explain_out.empty() ? out_dir_or_cwd(config) / "explain.json" : fs::path(explain_out);
            std::ofstream out(path);
            write_report_json(report, explain_a, explain_b, out);
            std::printf("%s over %s: %zu, %s over %s: %zu, both wrong: %zu (report: %s)\n", explain_a.c_str(),
                        explain_b.c_str(), report.a_over_b.size(), explain_b.c_str(), explain_a.c_str(),
                        report.b_over_a.size(), report.both_wrong.size(), path.string().c_str());
        } else if (run->parsed()) {
            ExperimentConfig cfg = config;
            cfg.out_dir = out_dir_or_cwd(config).string();
            const auto result = run_experiment(cfg);
            result.table.write_csv(std::cout);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
