#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "e2eg/dataset.hpp"
#include "e2eg/hlt.hpp"
#include "e2eg/model.hpp"

namespace e2eg {

enum class Mode { transductive, inductive };

std::string_view to_string(Mode m);
Mode parse_mode(std::string_view s);

/// Learning-rate maximum suited to a large pretrained transformer encoder.
inline constexpr double kReferenceLrMax = 6e-5;

/// Hyperparameters and strategy switches of one training run.
struct TrainConfig {
    double lr_max = 1e-3;  // desk-scale encoder; see kReferenceLrMax
    std::size_t batch_size = 32;
    double dropout = 0.1;
    int depth = 2;
    int branching = 2;
    double lambda = 1.0;
    double pos_weight = 1.0;
    int delay_rounds = 0;
    bool extra_round = false;
    Mode mode = Mode::transductive;
    double transductive_heldout_fraction = 1.0;  // share of valid+test nodes whose topology is trained on
    int patience = 3;
    int epochs_per_round = 1;
    int extra_max_epochs = 50;
    bool warm_start = true;
    bool use_nbr = true;
    bool use_main = true;
    bool early_stop_rounds = false;  // patience-based stopping inside curriculum rounds
    std::size_t embed_dim = 32;
    std::size_t hidden_dim = 64;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Linear decay lr_max * (1 - step / total_steps).
double lr_at(std::size_t step, std::size_t total_steps, double lr_max);

/// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8).
class Adam {
public:
    explicit Adam(std::vector<std::size_t> sizes);
    void step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads, double lr);
    std::size_t steps_taken() const { return t_; }

private:
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
};

struct LossMask {
    bool use_nbr = false;
    bool use_main = false;

    bool active() const { return use_nbr || use_main; }
    bool operator==(const LossMask&) const = default;
};

/// Decides per node and round which losses a node contributes to.
///
/// Train nodes always feed neighborhood prediction and, after the delay, the
/// main loss when labeled. Valid/test nodes feed neighborhood prediction only
/// in transductive mode and only inside the seeded heldout-topology subset;
/// they never feed the main loss.
class LossMasker {
public:
    LossMasker(const TextGraph& graph, const TrainConfig& config);
    LossMask mask(NodeId node, int round) const;
    bool in_heldout_topology(NodeId node) const { return heldout_[node]; }

private:
    const TextGraph* graph_;
    TrainConfig config_;
    std::vector<bool> heldout_;
};

/// Convenience wrapper; builds a LossMasker per call.
LossMask loss_mask(NodeId node, const TextGraph& graph, const TrainConfig& config, int round);

struct EpochRecord {
    int round = 0;
    int epoch = 0;
    std::size_t step = 0;  // optimizer steps taken in this round so far
    double loss_nbr = 0.0;
    double loss_main = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double lr = 0.0;  // rate of the last step in the epoch
    double wall_seconds = 0.0;
};

struct StepRecord {
    int round = 0;
    std::size_t step = 0;
    std::size_t total_steps = 0;
    double lr = 0.0;
    double objective = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::vector<StepRecord> steps;

    void append(const TrainHistory& other);
    /// Columns: [kind,]round,epoch,step,loss_nbr,loss_main,val_acc,lr. Wall time is not written.
    void write_csv(std::ostream& out, std::string_view kind = {}) const;
    /// Bitwise equality of every recorded value except wall time.
    bool same_trace(const TrainHistory& other) const;
};

struct RoundOutcome {
    ModelState state;
    TrainHistory history;
    std::optional<ModelState> best;  // best validation checkpoint seen in this call
    double best_val = -1.0;
};

/// Training samples for `nodes` at `round`, with masks applied.
std::vector<Sample> build_samples(const PreparedGraph& data, const NeighborhoodTarget* targets,
                                  const LossMasker& masker, int round, std::span<const NodeId> nodes);

std::vector<int> predict_all(const ModelState& state, const PreparedGraph& data);

/// One curriculum round: epochs over a seeded shuffle of active nodes, one
/// Adam step per batch on the composite loss.
RoundOutcome train_round(const ModelState& state, const PreparedGraph& data, const NeighborhoodTarget& targets,
                         const TrainConfig& config, int round);

/// Classification head only, encoder frozen, early stopping on validation accuracy.
RoundOutcome extra_round(const ModelState& state, const PreparedGraph& data, const TrainConfig& config);

struct CurriculumResult {
    ModelState best;            // highest validation accuracy seen anywhere
    ModelState curriculum_end;  // state after the last depth, before the extra round
    TrainHistory history;
    double best_val = -1.0;
    int best_round = 0;
    int total_rounds = 0;
    double val_before_extra = 0.0;
    double val_after_extra = 0.0;
};

/// Adjacency the neighborhood targets are projected from: the full graph in
/// transductive mode, the train-induced subgraph in inductive mode.
SparseMatrix training_adjacency(const TextGraph& graph, Mode mode);

CurriculumResult run_curriculum(const PreparedGraph& data, const HierLabelTree& hlt, const TrainConfig& config);

}  // namespace e2eg
