#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "e2eg/hlt.hpp"
#include "e2eg/rng.hpp"
#include "e2eg/sparse_matrix.hpp"

namespace e2eg {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return std::span(data).subspan(r * cols, cols); }
    std::span<const double> row(std::size_t r) const { return std::span(data).subspan(r * cols, cols); }

    bool operator==(const Matrix&) const = default;
};

/// Mean-of-embeddings encoder followed by one affine + ReLU layer and dropout.
struct EncoderState {
    Matrix embedding;  // |V| x e
    Matrix w1;         // e x h
    std::vector<double> b1;
    double dropout = 0.1;

    std::size_t vocab_size() const { return embedding.rows; }
    std::size_t embed_dim() const { return embedding.cols; }
    std::size_t hidden_dim() const { return w1.cols; }

    bool operator==(const EncoderState&) const = default;
};

struct HeadState {
    Matrix w_nbr;  // h x B^d, no bias
    Matrix w_cls;  // h x C
    std::vector<double> b_cls;

    bool operator==(const HeadState&) const = default;
};

struct ModelState {
    EncoderState encoder;
    HeadState heads;
    int depth = 0;
    std::uint64_t seed = 0;

    std::size_t num_classes() const { return heads.b_cls.size(); }
    std::size_t num_clusters() const { return heads.w_nbr.cols; }

    bool operator==(const ModelState&) const = default;
};

struct ModelDims {
    std::size_t vocab_size = 0;
    std::size_t embed_dim = 32;
    std::size_t hidden_dim = 64;
    std::size_t num_classes = 0;
    double dropout = 0.1;
};

/// Embeddings ~ N(0, 0.02); weights uniform in +-1/sqrt(fan_in); biases zero.
/// The neighborhood head starts empty (h x 0) until init_round_heads.
ModelState init_model(const ModelDims& dims, std::uint64_t seed);

/// Forward intermediates of one encoder pass.
struct EncoderCache {
    std::vector<std::uint32_t> tokens;
    std::vector<double> mean;         // e
    std::vector<double> pre;          // h, before ReLU
    std::vector<double> dropout_mask;  // h scale factors; empty when no dropout was applied
    std::vector<double> output;       // h
};

/// Passing a dropout stream selects train mode. Throws DimensionError on an
/// out-of-range token.
EncoderCache encode(const EncoderState& enc, std::span<const std::uint32_t> tokens, Rng* dropout = nullptr);

std::vector<double> nbr_scores(const HeadState& heads, std::span<const double> z);
std::vector<double> cls_logits(const HeadState& heads, std::span<const double> z);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

/// Weighted squared hinge, mean over labels. `positives` lists target label ids.
LossGrad squared_hinge_loss(std::span<const double> scores, std::span<const std::uint32_t> positives,
                            double pos_weight);

/// Softmax cross-entropy with max-subtraction; grad = softmax - onehot.
LossGrad cross_entropy_loss(std::span<const double> logits, int label);

/// Smallest index among the maxima.
int argmax(std::span<const double> values);

/// Gradients with the same shapes as ModelState's parameters.
struct ModelGrads {
    Matrix embedding;
    Matrix w1;
    std::vector<double> b1;
    Matrix w_nbr;
    Matrix w_cls;
    std::vector<double> b_cls;
    std::vector<std::uint32_t> touched_rows;  // embedding rows with nonzero contribution, sorted

    static ModelGrads zeros_like(const ModelState& state);
    void clear();
    void finalize_touched();

    bool operator==(const ModelGrads&) const = default;
};

/// Accumulates d(upstream . outputs)/d(params) into `grads` for one sample.
/// Either upstream span may be empty to skip that head. Dropout is replayed
/// from the cache's mask.
void backward(const ModelState& state, const EncoderCache& cache, std::span<const double> d_scores,
              std::span<const double> d_logits, ModelGrads& grads);

/// One training example with its loss switches.
struct Sample {
    std::span<const std::uint32_t> tokens;
    std::span<const std::uint32_t> positives;  // neighborhood target bits
    int label = -1;
    bool use_nbr = false;
    bool use_main = false;
};

struct LossWeights {
    double lambda = 1.0;
    double pos_weight = 1.0;
    double normalizer = 1.0;  // batch size
};

struct BatchLoss {
    double objective = 0.0;  // sum of weighted terms / normalizer
    double nbr_sum = 0.0;
    double main_sum = 0.0;
    std::size_t nbr_count = 0;
    std::size_t main_count = 0;
};

/// Composite loss sum_i [use_nbr L_nbr + use_main lambda L_cls] / normalizer and,
/// when `grads` is non-null, its exact gradient. Samples are processed in order.
BatchLoss composite_batch(const ModelState& state, std::span<const Sample> batch, const LossWeights& weights,
                          Rng* dropout, ModelGrads* grads);

/// Parameter tensors in canonical order: embedding, w1, b1, w_nbr, w_cls, b_cls.
std::vector<std::span<double>> parameter_views(ModelState& state);
std::vector<std::span<const double>> parameter_views(const ModelState& state);
std::vector<std::span<const double>> gradient_views(const ModelGrads& grads);
std::vector<std::string_view> parameter_names();

/// New neighborhood head for depth d. Warm start copies each child's parent
/// column from the current head when it has branching^(d-1) columns.
ModelState init_round_heads(const ModelState& state, const HierLabelTree& hlt, int d, bool warm_start,
                            std::uint64_t seed);

/// Checkpoint: text header line with dims/depth/seed, then the parameters as
/// little-endian float64 in canonical order.
void write_checkpoint(const ModelState& state, std::ostream& out);
ModelState read_checkpoint(std::istream& in);
void save_checkpoint(const ModelState& state, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace e2eg
