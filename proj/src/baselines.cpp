#include "e2eg/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "e2eg/errors.hpp"
#include "e2eg/metrics.hpp"

namespace e2eg {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct DenseForward {
    std::vector<double> pre;     // hidden pre-activations
    std::vector<double> hidden;  // post-ReLU
    std::vector<double> logits;
};

DenseForward forward(const DenseClassifier& clf, std::span<const double> x) {
    DenseForward f;
    std::span<const double> top = x;
    if (clf.hidden() > 0) {
        f.pre = clf.b1;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (x[j] == 0.0) continue;
            const auto w = clf.w1.row(j);
            for (std::size_t k = 0; k < f.pre.size(); ++k) f.pre[k] += w[k] * x[j];
        }
        f.hidden.resize(f.pre.size());
        for (std::size_t k = 0; k < f.pre.size(); ++k) f.hidden[k] = f.pre[k] > 0.0 ? f.pre[k] : 0.0;
        top = f.hidden;
    }
    f.logits = clf.b2;
    for (std::size_t k = 0; k < top.size(); ++k) {
        if (top[k] == 0.0) continue;
        const auto w = clf.w2.row(k);
        for (std::size_t c = 0; c < f.logits.size(); ++c) f.logits[c] += w[c] * top[k];
    }
    return f;
}

DenseClassifier init_dense(std::size_t inputs, std::size_t hidden, std::size_t classes, std::uint64_t seed) {
    DenseClassifier clf;
    Rng rng(derive_seed(seed, 701));
    std::size_t top = inputs;
    if (hidden > 0) {
        clf.w1 = Matrix(inputs, hidden);
        clf.b1.assign(hidden, 0.0);
        const double bound = 1.0 / std::sqrt(static_cast<double>(inputs));
        for (double& v : clf.w1.data) v = rng.uniform(-bound, bound);
        top = hidden;
    }
    clf.w2 = Matrix(top, classes);
    clf.b2.assign(classes, 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(top));
    for (double& v : clf.w2.data) v = rng.uniform(-bound, bound);
    return clf;
}

}  // namespace

std::string_view to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::text_only: return "text_only";
        case BaselineKind::degree_mlp: return "degree_mlp";
        case BaselineKind::two_stage: return "two_stage";
    }
    return "text_only";
}

std::vector<double> DenseClassifier::logits(std::span<const double> x) const { return forward(*this, x).logits; }

std::vector<int> predict_dense(const DenseClassifier& clf, const Matrix& features) {
    std::vector<int> preds(features.rows);
    for (std::size_t i = 0; i < features.rows; ++i) preds[i] = clf.predict(features.row(i));
    return preds;
}

DenseFit train_dense_classifier(const Matrix& features, const TextGraph& graph, const DenseTrainConfig& config) {
    if (features.rows != graph.size()) throw DimensionError("dense classifier: one feature row per node required");
    if (graph.num_classes() <= 0) throw ConfigError("dense classifier: graph has no classes");
    std::vector<NodeId> train_nodes, valid_nodes;
    std::vector<int> gold(graph.size(), -1);
    for (NodeId i = 0; i < graph.size(); ++i) {
        if (graph.split(i) == Split::test) continue;
        const int y = graph.label(i);
        if (y < 0) continue;
        gold[i] = y;
        (graph.split(i) == Split::train ? train_nodes : valid_nodes).push_back(i);
    }
    if (train_nodes.empty()) throw ConfigError("dense classifier: no labeled train nodes");

    const auto classes = static_cast<std::size_t>(graph.num_classes());
    const auto started = std::chrono::steady_clock::now();
    DenseClassifier clf = init_dense(features.cols, config.hidden, classes, config.seed);
    DenseClassifier grad = clf;
    auto params = [](DenseClassifier& c) {
        return std::vector<std::span<double>>{c.w1.data, c.b1, c.w2.data, c.b2};
    };
    auto cparams = [](const DenseClassifier& c) {
        return std::vector<std::span<const double>>{c.w1.data, c.b1, c.w2.data, c.b2};
    };
    std::vector<std::size_t> sizes;
    for (const auto p : cparams(clf)) sizes.push_back(p.size());
    Adam adam(sizes);

    DenseFit fit;
    fit.best = clf;
    const std::size_t steps_per_epoch = (train_nodes.size() + config.batch_size - 1) / config.batch_size;
    const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(config.max_epochs);
    const double inv_norm = 1.0 / static_cast<double>(config.batch_size);
    std::size_t step = 0;
    int since_best = 0;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::vector<NodeId> order = train_nodes;
        Rng shuffle_rng(derive_seed(config.seed, 702, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(std::span(order));
        double loss_sum = 0.0;
        double last_lr = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const auto end = std::min(order.size(), begin + config.batch_size);
            for (auto p : params(grad)) std::fill(p.begin(), p.end(), 0.0);
            double objective = 0.0;
            for (std::size_t k = begin; k < end; ++k) {
                const auto i = order[k];
                const auto x = features.row(i);
                const auto f = forward(clf, x);
                auto lg = cross_entropy_loss(f.logits, gold[i]);
                loss_sum += lg.loss;
                objective += lg.loss * inv_norm;
                for (double& g : lg.grad) g *= inv_norm;
                const std::span<const double> top = clf.hidden() > 0 ? std::span<const double>(f.hidden) : x;
                std::vector<double> d_top(top.size(), 0.0);
                for (std::size_t r = 0; r < top.size(); ++r) {
                    const auto w = clf.w2.row(r);
                    auto gw = grad.w2.row(r);
                    for (std::size_t c = 0; c < classes; ++c) {
                        gw[c] += top[r] * lg.grad[c];
                        d_top[r] += w[c] * lg.grad[c];
                    }
                }
                for (std::size_t c = 0; c < classes; ++c) grad.b2[c] += lg.grad[c];
                if (clf.hidden() > 0) {
                    for (std::size_t r = 0; r < d_top.size(); ++r) {
                        const double da = f.pre[r] > 0.0 ? d_top[r] : 0.0;
                        if (da == 0.0) continue;
                        grad.b1[r] += da;
                        for (std::size_t j = 0; j < x.size(); ++j) grad.w1(j, r) += x[j] * da;
                    }
                }
            }
            last_lr = lr_at(step, total_steps, config.lr_max);
            const auto p = params(clf);
            const auto g = cparams(grad);
            adam.step(p, g, last_lr);
            fit.history.steps.push_back({1, step, total_steps, last_lr, objective});
            ++step;
        }

        EpochRecord rec;
        rec.round = 1;
        rec.epoch = epoch;
        rec.step = step;
        rec.loss_nbr = kNaN;
        rec.loss_main = loss_sum / static_cast<double>(train_nodes.size());
        rec.lr = last_lr;
        std::vector<int> preds(graph.size(), -1);
        for (const auto i : train_nodes) preds[i] = clf.predict(features.row(i));
        for (const auto i : valid_nodes) preds[i] = clf.predict(features.row(i));
        rec.train_acc = accuracy(preds, gold, train_nodes);
        rec.val_acc = valid_nodes.empty() ? kNaN : accuracy(preds, gold, valid_nodes);
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        fit.history.epochs.push_back(rec);

        if (valid_nodes.empty()) {
            fit.best = clf;
            continue;
        }
        if (rec.val_acc > fit.best_val) {
            fit.best_val = rec.val_acc;
            fit.best = clf;
            since_best = 0;
        } else {
            ++since_best;
        }
        if (since_best >= config.patience) break;
    }
    return fit;
}

TrainConfig text_only_config(const TrainConfig& config) {
    TrainConfig out = config;
    out.epochs_per_round = config.depth * config.epochs_per_round;
    out.depth = 1;
    out.delay_rounds = 0;
    out.use_nbr = false;
    out.use_main = true;
    out.extra_round = false;
    out.early_stop_rounds = true;
    return out;
}

CurriculumResult train_text_only(const PreparedGraph& data, const TrainConfig& config) {
    const auto cfg = text_only_config(config);
    cfg.validate();
    // The label tree only sizes the (unused) neighborhood head.
    const auto hlt = build_hlt(data.tfidf, cfg.branching, 1, derive_seed(cfg.seed, 801));
    return run_curriculum(data, hlt, cfg);
}

Matrix degree_features(const TextGraph& graph) {
    Matrix out(graph.size(), 2);
    std::size_t max_deg = 0;
    for (NodeId i = 0; i < graph.size(); ++i) max_deg = std::max(max_deg, graph.degree(i));
    for (NodeId i = 0; i < graph.size(); ++i) {
        const auto deg = static_cast<double>(graph.degree(i));
        out(i, 0) = std::log1p(deg);
        out(i, 1) = max_deg ? deg / static_cast<double>(max_deg) : 0.0;
    }
    return out;
}

namespace {

DenseTrainConfig dense_config(const TrainConfig& config, std::uint64_t stream) {
    DenseTrainConfig out;
    out.hidden = config.hidden_dim;
    out.lr_max = config.lr_max;
    out.batch_size = config.batch_size;
    out.max_epochs = config.extra_max_epochs;
    out.patience = config.patience;
    out.seed = derive_seed(config.seed, stream);
    return out;
}

}  // namespace

DegreeMlpResult train_degree_mlp(const PreparedGraph& data, const TrainConfig& config) {
    config.validate();
    const Matrix features = degree_features(data.graph);
    auto fit = train_dense_classifier(features, data.graph, dense_config(config, 802));
    DegreeMlpResult out;
    out.predictions = predict_dense(fit.best, features);
    out.classifier = std::move(fit.best);
    out.history = std::move(fit.history);
    return out;
}

Matrix embed_all(const EncoderState& encoder, const PreparedGraph& data) {
    Matrix out(data.size(), encoder.hidden_dim());
    for (NodeId i = 0; i < data.size(); ++i) {
        const auto z = encode(encoder, data.tokens[i]).output;
        std::copy(z.begin(), z.end(), out.row(i).begin());
    }
    return out;
}

DenseFit train_downstream(const EncoderState& encoder, const PreparedGraph& data, const TrainConfig& config) {
    config.validate();
    return train_dense_classifier(embed_all(encoder, data), data.graph, dense_config(config, 803));
}

TwoStageResult train_two_stage(const PreparedGraph& data, const HierLabelTree& hlt, const TrainConfig& config) {
    TrainConfig stage1_cfg = config;
    stage1_cfg.use_main = false;
    stage1_cfg.extra_round = false;
    stage1_cfg.early_stop_rounds = false;

    TwoStageResult out;
    const auto reads_before = label_reads();
    auto stage1 = run_curriculum(data, hlt, stage1_cfg);
    out.stage1_label_reads = label_reads() - reads_before;
    out.stage1 = std::move(stage1.curriculum_end);
    out.history = std::move(stage1.history);

    const Matrix embeddings = embed_all(out.stage1.encoder, data);
    auto fit = train_dense_classifier(embeddings, data.graph, dense_config(config, 803));
    for (auto rec : fit.history.epochs) {
        rec.round = config.depth + 1;
        out.history.epochs.push_back(rec);
    }
    for (auto rec : fit.history.steps) {
        rec.round = config.depth + 1;
        out.history.steps.push_back(rec);
    }
    out.predictions = predict_dense(fit.best, embeddings);
    out.classifier = std::move(fit.best);
    return out;
}

}  // namespace e2eg
