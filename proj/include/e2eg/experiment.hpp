#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "e2eg/dataset.hpp"
#include "e2eg/graph_corpus.hpp"
#include "e2eg/metrics.hpp"
#include "e2eg/trainer.hpp"

namespace e2eg {

enum class ModelKind { e2eg, text_only, degree_mlp, two_stage };

std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

/// Everything one experiment needs. Loaded from a flat `key = value` file whose
/// keys mirror the field names below (synthetic fields carry a `synth_` prefix).
struct ExperimentConfig {
    std::string nodes_path;  // empty -> synthetic data
    std::string edges_path;
    SynthSpec synth;
    std::uint64_t synth_seed = 0;
    std::array<double, 3> split_ratios{0.2, 0.2, 0.6};
    std::uint64_t split_seed = 0;
    bool resplit = false;  // file data keeps its own split unless set
    FeatureConfig features;
    std::vector<ModelKind> kinds{ModelKind::e2eg};
    TrainConfig train;
    std::vector<std::uint64_t> seeds{0};
    std::string out_dir;

    bool synthetic() const { return nodes_path.empty(); }
    void validate() const;
};

/// Applies one `key = value` pair; unknown keys and unparseable values throw ConfigError.
void apply_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
void write_config(const ExperimentConfig& config, std::ostream& out);

/// Loads or generates the graph, applies the split, and derives text features.
PreparedGraph load_experiment_data(const ExperimentConfig& config);

struct RunRow {
    ModelKind kind = ModelKind::e2eg;
    Mode mode = Mode::transductive;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    double train_acc = 0.0;
    double valid_acc = 0.0;
    double test_acc = 0.0;
};

struct AggregateRow {
    ModelKind kind = ModelKind::e2eg;
    Mode mode = Mode::transductive;
    std::size_t runs = 0;
    MeanStd train, valid, test;
};

/// Per-(kind, seed) accuracies and per-kind mean / sample stddev over successful runs.
struct ResultTable {
    std::vector<RunRow> rows;
    std::vector<AggregateRow> aggregates;

    void recompute_aggregates();
    const AggregateRow* aggregate_for(ModelKind kind) const;
    std::vector<double> test_accuracies(ModelKind kind) const;
    std::vector<double> valid_accuracies(ModelKind kind) const;

    /// Columns: row_type,kind,mode,seed,status,runs,train_acc,valid_acc,test_acc,train_std,valid_std,test_std
    void write_csv(std::ostream& out) const;
    static ResultTable read_csv(std::istream& in);
};

/// Output of one (kind, seed) training run.
struct RunOutput {
    std::vector<int> predictions;
    TrainHistory history;
    std::optional<ModelState> checkpoint;
    double val_before_extra = 0.0;
    double val_after_extra = 0.0;
};

RunOutput train_kind(ModelKind kind, const PreparedGraph& data, const TrainConfig& config);

struct ExperimentOutput {
    ResultTable table;
    std::map<ModelKind, std::vector<std::vector<int>>> predictions;  // per kind, per seed (config order)
    std::map<ModelKind, std::vector<RunOutput>> runs;
};

/// Trains every (kind, seed), evaluates all splits, and, when out_dir is set,
/// writes results.csv, summary.md, and per-run histories, predictions, and checkpoints.
ExperimentOutput run_experiment(const ExperimentConfig& config);
ExperimentOutput run_experiment(const ExperimentConfig& config, const PreparedGraph& data);

struct DisagreementEntry {
    NodeId node = 0;
    std::string text;
    int gold = -1;
    std::vector<int> preds_a;
    std::vector<int> preds_b;
    std::map<int, std::size_t> two_hop_classes;  // gold class -> count; -1 counts unlabeled nodes
};

struct DisagreementReport {
    std::vector<DisagreementEntry> a_over_b;   // every A seed right, every B seed wrong
    std::vector<DisagreementEntry> b_over_a;   // the mirror image
    std::vector<DisagreementEntry> both_wrong;  // every seed of both wrong
};

/// Consistent disagreements between two models across seeds on `subset`.
/// Unlabeled nodes are skipped. Throws DimensionError on a seed-coverage mismatch.
DisagreementReport disagreement_samples(std::span<const std::vector<int>> preds_a,
                                        std::span<const std::vector<int>> preds_b, const TextGraph& graph,
                                        std::span<const NodeId> subset);

void write_report_json(const DisagreementReport& report, std::string_view name_a, std::string_view name_b,
                       std::ostream& out);

}  // namespace e2eg
