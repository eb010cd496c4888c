#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "e2eg/dataset.hpp"
#include "e2eg/hlt.hpp"
#include "e2eg/model.hpp"
#include "e2eg/trainer.hpp"

namespace e2eg {

enum class BaselineKind { text_only, degree_mlp, two_stage };

std::string_view to_string(BaselineKind k);

/// Feed-forward classifier over fixed feature vectors. `hidden == 0` means a
/// single affine layer; otherwise one ReLU hidden layer.
struct DenseClassifier {
    Matrix w1;  // f x hidden
    std::vector<double> b1;
    Matrix w2;  // hidden (or f) x C
    std::vector<double> b2;

    std::size_t hidden() const { return b1.size(); }
    std::vector<double> logits(std::span<const double> x) const;
    int predict(std::span<const double> x) const { return argmax(logits(x)); }

    bool operator==(const DenseClassifier&) const = default;
};

struct DenseTrainConfig {
    std::size_t hidden = 64;
    double lr_max = 1e-3;
    std::size_t batch_size = 32;
    int max_epochs = 50;
    int patience = 3;
    std::uint64_t seed = 0;
};

struct DenseFit {
    DenseClassifier best;  // best validation checkpoint
    TrainHistory history;
    double best_val = -1.0;
};

/// Cross-entropy on labeled train rows of `features` (n x f), Adam with linear
/// decay over max_epochs, early stopping on validation accuracy.
DenseFit train_dense_classifier(const Matrix& features, const TextGraph& graph, const DenseTrainConfig& config);

std::vector<int> predict_dense(const DenseClassifier& clf, const Matrix& features);

/// Config the text-only baseline runs the curriculum with: one depth, no
/// neighborhood loss, the same epoch budget as the full curriculum, and
/// patience-based stopping.
TrainConfig text_only_config(const TrainConfig& config);

/// Encoder + classification head trained on cross-entropy only.
CurriculumResult train_text_only(const PreparedGraph& data, const TrainConfig& config);

/// [log(1 + deg), deg / max_deg] per node.
Matrix degree_features(const TextGraph& graph);

struct DegreeMlpResult {
    DenseClassifier classifier;
    TrainHistory history;
    std::vector<int> predictions;
};

DegreeMlpResult train_degree_mlp(const PreparedGraph& data, const TrainConfig& config);

/// Frozen-encoder embeddings (eval mode), one row per node.
Matrix embed_all(const EncoderState& encoder, const PreparedGraph& data);

/// Stage-2 classifier on frozen embeddings; one hidden layer of width h.
DenseFit train_downstream(const EncoderState& encoder, const PreparedGraph& data, const TrainConfig& config);

struct TwoStageResult {
    ModelState stage1;             // neighborhood-only curriculum output
    std::size_t stage1_label_reads = 0;
    DenseClassifier classifier;
    TrainHistory history;
    std::vector<int> predictions;
};

TwoStageResult train_two_stage(const PreparedGraph& data, const HierLabelTree& hlt, const TrainConfig& config);

}  // namespace e2eg
