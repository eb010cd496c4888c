#include "e2eg/trainer.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "e2eg/errors.hpp"
#include "e2eg/metrics.hpp"

namespace e2eg {
namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool bits_equal(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

double mean_or_nan(double sum, std::size_t count) { return count ? sum / static_cast<double>(count) : kNaN; }

ModelDims dims_for(const PreparedGraph& data, const TrainConfig& config) {
    return ModelDims{data.vocab.size(), config.embed_dim, config.hidden_dim,
                     static_cast<std::size_t>(data.graph.num_classes()), config.dropout};
}

}  // namespace

std::string_view to_string(Mode m) { return m == Mode::transductive ? "transductive" : "inductive"; }

Mode parse_mode(std::string_view s) {
    if (s == "transductive") return Mode::transductive;
    if (s == "inductive") return Mode::inductive;
    throw ConfigError("unknown mode '" + std::string(s) + "' (expected transductive or inductive)");
}

void TrainConfig::validate() const {
    if (!(lr_max > 0.0)) throw ConfigError("lr_max must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (depth < 1) throw ConfigError("depth must be >= 1");
    if (branching < 2) throw ConfigError("branching must be >= 2");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
    if (!(pos_weight > 0.0)) throw ConfigError("pos_weight must be positive");
    if (delay_rounds < 0 || delay_rounds > depth) throw ConfigError("delay_rounds must lie in [0, depth]");
    if (!(transductive_heldout_fraction >= 0.0 && transductive_heldout_fraction <= 1.0))
        throw ConfigError("transductive_heldout_fraction must lie in [0, 1]");
    if (patience < 0) throw ConfigError("patience must be >= 0");
    if (epochs_per_round < 1) throw ConfigError("epochs_per_round must be >= 1");
    if (extra_max_epochs < 1) throw ConfigError("extra_max_epochs must be >= 1");
    if (embed_dim < 1 || hidden_dim < 1) throw ConfigError("embed_dim and hidden_dim must be >= 1");
}

double lr_at(std::size_t step, std::size_t total_steps, double lr_max) {
    return lr_max * (1.0 - static_cast<double>(step) / static_cast<double>(total_steps));
}

Adam::Adam(std::vector<std::size_t> sizes) {
    for (const auto n : sizes) {
        m_.emplace_back(n, 0.0);
        v_.emplace_back(n, 0.0);
    }
}

void Adam::step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size()) throw DimensionError("adam: tensor count mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto param = params[p];
        const auto grad = grads[p];
        if (param.size() != m_[p].size() || grad.size() != m_[p].size())
            throw DimensionError("adam: tensor size mismatch");
        auto& m = m_[p];
        auto& v = v_[p];
        for (std::size_t i = 0; i < param.size(); ++i) {
            m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
            v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
            param[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kAdamEps);
        }
    }
}

LossMasker::LossMasker(const TextGraph& graph, const TrainConfig& config)
    : graph_(&graph), config_(config), heldout_(graph.size(), false) {
    if (config.mode != Mode::transductive) return;
    std::vector<NodeId> candidates;
    for (NodeId i = 0; i < graph.size(); ++i)
        if (graph.split(i) != Split::train) candidates.push_back(i);
    Rng rng(derive_seed(config.seed, 401));
    rng.shuffle(std::span(candidates));
    const auto keep = static_cast<std::size_t>(
        std::llround(config.transductive_heldout_fraction * static_cast<double>(candidates.size())));
    for (std::size_t k = 0; k < std::min(keep, candidates.size()); ++k) heldout_[candidates[k]] = true;
}

LossMask LossMasker::mask(NodeId node, int round) const {
    LossMask out;
    if (graph_->split(node) == Split::train) {
        out.use_nbr = config_.use_nbr;
        out.use_main = config_.use_main && round > config_.delay_rounds && graph_->label(node) >= 0;
    } else {
        out.use_nbr = config_.use_nbr && config_.mode == Mode::transductive && heldout_[node];
    }
    return out;
}

LossMask loss_mask(NodeId node, const TextGraph& graph, const TrainConfig& config, int round) {
    if (node >= graph.size()) throw DimensionError("loss_mask: node out of range");
    return LossMasker(graph, config).mask(node, round);
}

void TrainHistory::append(const TrainHistory& other) {
    epochs.insert(epochs.end(), other.epochs.begin(), other.epochs.end());
    steps.insert(steps.end(), other.steps.begin(), other.steps.end());
}

void TrainHistory::write_csv(std::ostream& out, std::string_view kind) const {
    if (!kind.empty()) out << "kind,";
    out << "round,epoch,step,loss_nbr,loss_main,val_acc,lr\n";
    for (const auto& r : epochs) {
        if (!kind.empty()) out << kind << ',';
        out << r.round << ',' << r.epoch << ',' << r.step << ',' << fmt_double(r.loss_nbr) << ','
            << fmt_double(r.loss_main) << ',' << fmt_double(r.val_acc) << ',' << fmt_double(r.lr) << '\n';
    }
}

bool TrainHistory::same_trace(const TrainHistory& other) const {
    if (epochs.size() != other.epochs.size() || steps.size() != other.steps.size()) return false;
    for (std::size_t i = 0; i < epochs.size(); ++i) {
        const auto& a = epochs[i];
        const auto& b = other.epochs[i];
        if (a.round != b.round || a.epoch != b.epoch || a.step != b.step || !bits_equal(a.loss_nbr, b.loss_nbr) ||
            !bits_equal(a.loss_main, b.loss_main) || !bits_equal(a.train_acc, b.train_acc) ||
            !bits_equal(a.val_acc, b.val_acc) || !bits_equal(a.lr, b.lr))
            return false;
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& a = steps[i];
        const auto& b = other.steps[i];
        if (a.round != b.round || a.step != b.step || a.total_steps != b.total_steps || !bits_equal(a.lr, b.lr) ||
            !bits_equal(a.objective, b.objective))
            return false;
    }
    return true;
}

std::vector<Sample> build_samples(const PreparedGraph& data, const NeighborhoodTarget* targets,
                                  const LossMasker& masker, int round, std::span<const NodeId> nodes) {
    std::vector<Sample> out;
    out.reserve(nodes.size());
    for (const auto i : nodes) {
        const auto m = masker.mask(i, round);
        Sample s;
        s.tokens = data.tokens[i];
        // Nodes without any neighbor carry no neighborhood signal and are skipped.
        s.use_nbr = m.use_nbr && targets != nullptr && !targets->row(i).empty();
        s.use_main = m.use_main;
        if (s.use_nbr) s.positives = targets->row(i).indices;
        if (s.use_main) s.label = data.graph.label(i);
        out.push_back(s);
    }
    return out;
}

std::vector<int> predict_all(const ModelState& state, const PreparedGraph& data) {
    std::vector<int> preds(data.size());
    for (NodeId i = 0; i < data.size(); ++i) {
        const auto cache = encode(state.encoder, data.tokens[i]);
        preds[i] = argmax(cls_logits(state.heads, cache.output));
    }
    return preds;
}

RoundOutcome train_round(const ModelState& state, const PreparedGraph& data, const NeighborhoodTarget& targets,
                         const TrainConfig& config, int round) {
    config.validate();
    if (targets.depth != state.depth) throw DimensionError("train_round: target depth does not match model depth");
    if (targets.num_labels() != state.num_clusters() || targets.bits.rows() != data.size())
        throw DimensionError("train_round: target shape does not match the neighborhood head");

    const auto started = std::chrono::steady_clock::now();
    RoundOutcome out;
    out.state = state;
    ModelState& model = out.state;

    const LossMasker masker(data.graph, config);
    std::vector<NodeId> active;
    for (NodeId i = 0; i < data.size(); ++i) {
        const auto m = masker.mask(i, round);
        if (m.use_main || (m.use_nbr && !targets.row(i).empty())) active.push_back(i);
    }

    const std::size_t steps_per_epoch = ceil_div(active.size(), config.batch_size);
    const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(config.epochs_per_round);
    std::vector<std::size_t> sizes;
    for (const auto v : parameter_views(model)) sizes.push_back(v.size());
    Adam adam(sizes);
    ModelGrads grads = ModelGrads::zeros_like(model);
    Rng dropout_rng(derive_seed(config.seed, 302, static_cast<std::uint64_t>(round)));
    const LossWeights weights{config.lambda, config.pos_weight, static_cast<double>(config.batch_size)};
    const bool evaluate = config.use_main;

    std::size_t step = 0;
    int since_best = 0;
    for (int epoch = 1; epoch <= config.epochs_per_round; ++epoch) {
        std::vector<NodeId> order = active;
        Rng shuffle_rng(derive_seed(config.seed, 301, static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(std::span(order));

        double nbr_sum = 0.0, main_sum = 0.0;
        std::size_t nbr_count = 0, main_count = 0;
        double last_lr = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const auto len = std::min(config.batch_size, order.size() - begin);
            const auto batch = build_samples(data, &targets, masker, round, std::span(order).subspan(begin, len));
            grads.clear();
            const auto loss = composite_batch(model, batch, weights, &dropout_rng, &grads);
            last_lr = lr_at(step, total_steps, config.lr_max);
            const auto params = parameter_views(model);
            const auto grad_views = gradient_views(grads);
            adam.step(params, grad_views, last_lr);
            out.history.steps.push_back({round, step, total_steps, last_lr, loss.objective});
            ++step;
            nbr_sum += loss.nbr_sum;
            main_sum += loss.main_sum;
            nbr_count += loss.nbr_count;
            main_count += loss.main_count;
        }

        EpochRecord rec;
        rec.round = round;
        rec.epoch = epoch;
        rec.step = step;
        rec.loss_nbr = mean_or_nan(nbr_sum, nbr_count);
        rec.loss_main = mean_or_nan(main_sum, main_count);
        rec.lr = last_lr;
        rec.train_acc = kNaN;
        rec.val_acc = kNaN;
        if (evaluate) {
            const auto preds = predict_all(model, data);
            rec.train_acc = split_accuracy(preds, data.graph, Split::train);
            rec.val_acc = split_accuracy(preds, data.graph, Split::valid);
        }
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        out.history.epochs.push_back(rec);

        if (!std::isnan(rec.val_acc) && rec.val_acc > out.best_val) {
            out.best_val = rec.val_acc;
            out.best = model;
            since_best = 0;
        } else {
            ++since_best;
        }
        if (config.early_stop_rounds && evaluate && since_best >= config.patience) break;
    }
    return out;
}

RoundOutcome extra_round(const ModelState& state, const PreparedGraph& data, const TrainConfig& config) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    const int round = state.depth + 1;

    std::vector<NodeId> train_nodes, valid_nodes;
    std::vector<int> gold(data.size(), -1);
    for (NodeId i = 0; i < data.size(); ++i) {
        const Split s = data.graph.split(i);
        if (s == Split::test) continue;
        const int y = data.graph.label(i);
        if (y < 0) continue;
        gold[i] = y;
        (s == Split::train ? train_nodes : valid_nodes).push_back(i);
    }
    if (train_nodes.empty()) throw ConfigError("extra_round: no labeled train nodes");
    if (valid_nodes.empty()) throw ConfigError("extra_round: early stopping needs labeled validation nodes");

    // Encoder is frozen, so embeddings are computed once in eval mode.
    std::vector<std::vector<double>> z(data.size());
    for (const auto i : train_nodes) z[i] = encode(state.encoder, data.tokens[i]).output;
    for (const auto i : valid_nodes) z[i] = encode(state.encoder, data.tokens[i]).output;

    RoundOutcome out;
    out.state = state;
    auto& heads = out.state.heads;
    const std::size_t h = heads.w_cls.rows;
    const std::size_t classes = heads.w_cls.cols;
    Adam adam({heads.w_cls.data.size(), heads.b_cls.size()});
    Matrix g_w(h, classes);
    std::vector<double> g_b(classes);

    const auto accuracy_on = [&](std::span<const NodeId> nodes) {
        std::vector<int> preds(data.size(), -1);
        for (const auto i : nodes) preds[i] = argmax(cls_logits(heads, z[i]));
        return accuracy(preds, gold, nodes);
    };

    const std::size_t steps_per_epoch = ceil_div(train_nodes.size(), config.batch_size);
    const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(config.extra_max_epochs);
    const double inv_norm = 1.0 / static_cast<double>(config.batch_size);
    std::size_t step = 0;
    int since_best = 0;
    for (int epoch = 1; epoch <= config.extra_max_epochs; ++epoch) {
        std::vector<NodeId> order = train_nodes;
        Rng shuffle_rng(derive_seed(config.seed, 501, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(std::span(order));
        double loss_sum = 0.0;
        double last_lr = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const auto end = std::min(order.size(), begin + config.batch_size);
            std::fill(g_w.data.begin(), g_w.data.end(), 0.0);
            std::fill(g_b.begin(), g_b.end(), 0.0);
            double objective = 0.0;
            for (std::size_t k = begin; k < end; ++k) {
                const auto i = order[k];
                const auto lg = cross_entropy_loss(cls_logits(heads, z[i]), gold[i]);
                loss_sum += lg.loss;
                objective += config.lambda * lg.loss * inv_norm;
                for (std::size_t r = 0; r < h; ++r) {
                    if (z[i][r] == 0.0) continue;
                    auto row = g_w.row(r);
                    for (std::size_t c = 0; c < classes; ++c) row[c] += z[i][r] * lg.grad[c] * inv_norm;
                }
                for (std::size_t c = 0; c < classes; ++c) g_b[c] += lg.grad[c] * inv_norm;
            }
            last_lr = lr_at(step, total_steps, config.lr_max);
            const std::span<double> params[] = {heads.w_cls.data, heads.b_cls};
            const std::span<const double> grad_views[] = {g_w.data, g_b};
            adam.step(params, grad_views, last_lr);
            out.history.steps.push_back({round, step, total_steps, last_lr, objective});
            ++step;
        }

        EpochRecord rec;
        rec.round = round;
        rec.epoch = epoch;
        rec.step = step;
        rec.loss_nbr = kNaN;
        rec.loss_main = loss_sum / static_cast<double>(train_nodes.size());
        rec.lr = last_lr;
        rec.train_acc = accuracy_on(train_nodes);
        rec.val_acc = accuracy_on(valid_nodes);
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        out.history.epochs.push_back(rec);

        if (rec.val_acc > out.best_val) {
            out.best_val = rec.val_acc;
            out.best = out.state;
            since_best = 0;
        } else {
            ++since_best;
        }
        if (since_best >= config.patience) break;
    }
    return out;
}

SparseMatrix training_adjacency(const TextGraph& graph, Mode mode) {
    if (mode == Mode::transductive) return graph.adjacency();
    std::vector<bool> keep(graph.size());
    for (NodeId i = 0; i < graph.size(); ++i) keep[i] = graph.split(i) == Split::train;
    return graph.with_induced_edges(keep).adjacency();
}

CurriculumResult run_curriculum(const PreparedGraph& data, const HierLabelTree& hlt, const TrainConfig& config) {
    config.validate();
    if (config.depth > hlt.depth()) throw ConfigError("run_curriculum: config depth exceeds the label tree depth");
    if (hlt.num_nodes() != data.size()) throw DimensionError("run_curriculum: label tree does not cover the graph");

    CurriculumResult result;
    ModelState state = init_model(dims_for(data, config), config.seed);
    const SparseMatrix adjacency = training_adjacency(data.graph, config.mode);
    std::optional<ModelState> best;

    for (int d = 1; d <= config.depth; ++d) {
        state = init_round_heads(state, hlt, d, config.warm_start, derive_seed(config.seed, 601));
        const auto targets = project_targets(adjacency, hlt, d);
        auto round = train_round(state, data, targets, config, d);
        state = std::move(round.state);
        result.history.append(round.history);
        if (round.best && round.best_val > result.best_val) {
            result.best_val = round.best_val;
            result.best_round = d;
            best = std::move(round.best);
        }
    }
    result.curriculum_end = state;
    result.total_rounds = config.depth;

    if (config.extra_round) {
        result.val_before_extra = split_accuracy(predict_all(state, data), data.graph, Split::valid);
        auto extra = extra_round(state, data, config);
        result.history.append(extra.history);
        result.val_after_extra = extra.best_val;
        result.total_rounds += 1;
        if (extra.best && extra.best_val > result.best_val) {
            result.best_val = extra.best_val;
            result.best_round = config.depth + 1;
            best = std::move(extra.best);
        }
        if (!best) best = std::move(extra.state);
    }
    result.best = best ? std::move(*best) : state;
    return result;
}

}  // namespace e2eg
