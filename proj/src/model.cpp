#include "e2eg/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "e2eg/errors.hpp"

namespace e2eg {
namespace {

void fill_uniform(std::span<double> values, double bound, Rng& rng) {
    for (double& v : values) v = rng.uniform(-bound, bound);
}

}  // namespace

ModelState init_model(const ModelDims& dims, std::uint64_t seed) {
    if (dims.vocab_size == 0 || dims.embed_dim == 0 || dims.hidden_dim == 0 || dims.num_classes == 0)
        throw ConfigError("init_model: all dimensions must be positive");
    if (!(dims.dropout >= 0.0 && dims.dropout < 1.0)) throw ConfigError("init_model: dropout must lie in [0, 1)");

    ModelState state;
    state.seed = seed;
    auto& enc = state.encoder;
    enc.dropout = dims.dropout;
    enc.embedding = Matrix(dims.vocab_size, dims.embed_dim);
    enc.w1 = Matrix(dims.embed_dim, dims.hidden_dim);
    enc.b1.assign(dims.hidden_dim, 0.0);

    Rng emb_rng(derive_seed(seed, 101));
    for (double& v : enc.embedding.data) v = emb_rng.normal(0.0, 0.02);
    Rng w1_rng(derive_seed(seed, 102));
    fill_uniform(enc.w1.data, 1.0 / std::sqrt(static_cast<double>(dims.embed_dim)), w1_rng);

    state.heads.w_nbr = Matrix(dims.hidden_dim, 0);
    state.heads.w_cls = Matrix(dims.hidden_dim, dims.num_classes);
    state.heads.b_cls.assign(dims.num_classes, 0.0);
    Rng cls_rng(derive_seed(seed, 103));
    fill_uniform(state.heads.w_cls.data, 1.0 / std::sqrt(static_cast<double>(dims.hidden_dim)), cls_rng);
    return state;
}

EncoderCache encode(const EncoderState& enc, std::span<const std::uint32_t> tokens, Rng* dropout) {
    const std::size_t e = enc.embed_dim();
    const std::size_t h = enc.hidden_dim();
    EncoderCache cache;
    cache.tokens.assign(tokens.begin(), tokens.end());
    cache.mean.assign(e, 0.0);
    for (const auto t : tokens) {
        if (t >= enc.vocab_size()) throw DimensionError("encode: token index out of range");
        const auto row = enc.embedding.row(t);
        for (std::size_t j = 0; j < e; ++j) cache.mean[j] += row[j];
    }
    if (!tokens.empty()) {
        const double inv = 1.0 / static_cast<double>(tokens.size());
        for (double& v : cache.mean) v *= inv;
    }

    cache.pre = enc.b1;
    for (std::size_t j = 0; j < e; ++j) {
        const double m = cache.mean[j];
        if (m == 0.0) continue;
        const auto w = enc.w1.row(j);
        for (std::size_t k = 0; k < h; ++k) cache.pre[k] += w[k] * m;
    }
    cache.output.resize(h);
    for (std::size_t k = 0; k < h; ++k) cache.output[k] = cache.pre[k] > 0.0 ? cache.pre[k] : 0.0;

    if (dropout != nullptr && enc.dropout > 0.0) {
        const double keep_scale = 1.0 / (1.0 - enc.dropout);
        cache.dropout_mask.resize(h);
        for (std::size_t k = 0; k < h; ++k) {
            cache.dropout_mask[k] = dropout->uniform() < enc.dropout ? 0.0 : keep_scale;
            cache.output[k] *= cache.dropout_mask[k];
        }
    }
    return cache;
}

std::vector<double> nbr_scores(const HeadState& heads, std::span<const double> z) {
    const auto& w = heads.w_nbr;
    if (z.size() != w.rows) throw DimensionError("nbr_scores: embedding size does not match head");
    std::vector<double> scores(w.cols, 0.0);
    for (std::size_t k = 0; k < w.rows; ++k) {
        if (z[k] == 0.0) continue;
        const auto row = w.row(k);
        for (std::size_t c = 0; c < w.cols; ++c) scores[c] += row[c] * z[k];
    }
    return scores;
}

std::vector<double> cls_logits(const HeadState& heads, std::span<const double> z) {
    const auto& w = heads.w_cls;
    if (z.size() != w.rows) throw DimensionError("cls_logits: embedding size does not match head");
    std::vector<double> logits = heads.b_cls;
    for (std::size_t k = 0; k < w.rows; ++k) {
        if (z[k] == 0.0) continue;
        const auto row = w.row(k);
        for (std::size_t c = 0; c < w.cols; ++c) logits[c] += row[c] * z[k];
    }
    return logits;
}

LossGrad squared_hinge_loss(std::span<const double> scores, std::span<const std::uint32_t> positives,
                            double pos_weight) {
    LossGrad out;
    out.grad.assign(scores.size(), 0.0);
    if (scores.empty()) return out;
    std::vector<char> is_pos(scores.size(), 0);
    for (const auto c : positives) {
        if (c >= scores.size()) throw DimensionError("squared_hinge_loss: target label out of range");
        is_pos[c] = 1;
    }
    const double inv_labels = 1.0 / static_cast<double>(scores.size());
    for (std::size_t c = 0; c < scores.size(); ++c) {
        const double y = is_pos[c] ? 1.0 : -1.0;
        const double w = is_pos[c] ? pos_weight : 1.0;
        const double slack = 1.0 - y * scores[c];
        if (slack > 0.0) {
            out.loss += w * slack * slack;
            out.grad[c] = -2.0 * w * y * slack * inv_labels;
        }
    }
    out.loss *= inv_labels;
    return out;
}

LossGrad cross_entropy_loss(std::span<const double> logits, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
        throw DimensionError("cross_entropy_loss: label out of range");
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    LossGrad out;
    out.grad.resize(logits.size());
    double denom = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c) {
        out.grad[c] = std::exp(logits[c] - max_logit);
        denom += out.grad[c];
    }
    for (double& g : out.grad) g /= denom;
    out.loss = -(logits[static_cast<std::size_t>(label)] - max_logit - std::log(denom));
    if (out.loss < 0.0) out.loss = 0.0;
    out.grad[static_cast<std::size_t>(label)] -= 1.0;
    return out;
}

int argmax(std::span<const double> values) {
    int best = 0;
    for (std::size_t c = 1; c < values.size(); ++c)
        if (values[c] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    return best;
}

ModelGrads ModelGrads::zeros_like(const ModelState& state) {
    ModelGrads g;
    const auto& enc = state.encoder;
    g.embedding = Matrix(enc.embedding.rows, enc.embedding.cols);
    g.w1 = Matrix(enc.w1.rows, enc.w1.cols);
    g.b1.assign(enc.b1.size(), 0.0);
    g.w_nbr = Matrix(state.heads.w_nbr.rows, state.heads.w_nbr.cols);
    g.w_cls = Matrix(state.heads.w_cls.rows, state.heads.w_cls.cols);
    g.b_cls.assign(state.heads.b_cls.size(), 0.0);
    return g;
}

void ModelGrads::clear() {
    for (const auto t : touched_rows) std::fill_n(embedding.row(t).begin(), embedding.cols, 0.0);
    touched_rows.clear();
    std::fill(w1.data.begin(), w1.data.end(), 0.0);
    std::fill(b1.begin(), b1.end(), 0.0);
    std::fill(w_nbr.data.begin(), w_nbr.data.end(), 0.0);
    std::fill(w_cls.data.begin(), w_cls.data.end(), 0.0);
    std::fill(b_cls.begin(), b_cls.end(), 0.0);
}

void ModelGrads::finalize_touched() {
    std::sort(touched_rows.begin(), touched_rows.end());
    touched_rows.erase(std::unique(touched_rows.begin(), touched_rows.end()), touched_rows.end());
}

void backward(const ModelState& state, const EncoderCache& cache, std::span<const double> d_scores,
              std::span<const double> d_logits, ModelGrads& grads) {
    const auto& enc = state.encoder;
    const auto& heads = state.heads;
    const std::size_t h = enc.hidden_dim();
    const std::size_t e = enc.embed_dim();
    if (cache.output.size() != h || cache.mean.size() != e) throw DimensionError("backward: missing or stale cache");
    if (!d_scores.empty() && d_scores.size() != heads.w_nbr.cols)
        throw DimensionError("backward: score gradient does not match the neighborhood head");
    if (!d_logits.empty() && d_logits.size() != heads.w_cls.cols)
        throw DimensionError("backward: logit gradient does not match the classification head");

    std::vector<double> dz(h, 0.0);
    const auto& z = cache.output;
    for (std::size_t k = 0; k < h; ++k) {
        if (!d_scores.empty()) {
            const auto w = heads.w_nbr.row(k);
            auto gw = grads.w_nbr.row(k);
            double acc = 0.0;
            for (std::size_t c = 0; c < d_scores.size(); ++c) {
                gw[c] += z[k] * d_scores[c];
                acc += w[c] * d_scores[c];
            }
            dz[k] += acc;
        }
        if (!d_logits.empty()) {
            const auto w = heads.w_cls.row(k);
            auto gw = grads.w_cls.row(k);
            double acc = 0.0;
            for (std::size_t c = 0; c < d_logits.size(); ++c) {
                gw[c] += z[k] * d_logits[c];
                acc += w[c] * d_logits[c];
            }
            dz[k] += acc;
        }
    }
    for (std::size_t c = 0; c < d_logits.size(); ++c) grads.b_cls[c] += d_logits[c];

    // dz -> pre-activation through dropout and ReLU.
    std::vector<double> da(h, 0.0);
    for (std::size_t k = 0; k < h; ++k) {
        const double scale = cache.dropout_mask.empty() ? 1.0 : cache.dropout_mask[k];
        da[k] = cache.pre[k] > 0.0 ? dz[k] * scale : 0.0;
    }
    for (std::size_t k = 0; k < h; ++k) grads.b1[k] += da[k];
    std::vector<double> dmean(e, 0.0);
    for (std::size_t j = 0; j < e; ++j) {
        const auto w = enc.w1.row(j);
        auto gw = grads.w1.row(j);
        double acc = 0.0;
        for (std::size_t k = 0; k < h; ++k) {
            gw[k] += cache.mean[j] * da[k];
            acc += w[k] * da[k];
        }
        dmean[j] = acc;
    }
    if (cache.tokens.empty()) return;
    const double inv = 1.0 / static_cast<double>(cache.tokens.size());
    for (const auto t : cache.tokens) {
        auto row = grads.embedding.row(t);
        for (std::size_t j = 0; j < e; ++j) row[j] += dmean[j] * inv;
        grads.touched_rows.push_back(t);
    }
}

BatchLoss composite_batch(const ModelState& state, std::span<const Sample> batch, const LossWeights& weights,
                          Rng* dropout, ModelGrads* grads) {
    BatchLoss out;
    const double inv_norm = 1.0 / weights.normalizer;
    std::vector<double> d_scores, d_logits;
    for (const auto& sample : batch) {
        if (!sample.use_nbr && !sample.use_main) continue;
        const auto cache = encode(state.encoder, sample.tokens, dropout);
        d_scores.clear();
        d_logits.clear();
        if (sample.use_nbr) {
            auto lg = squared_hinge_loss(nbr_scores(state.heads, cache.output), sample.positives, weights.pos_weight);
            out.nbr_sum += lg.loss;
            ++out.nbr_count;
            out.objective += lg.loss * inv_norm;
            d_scores = std::move(lg.grad);
            for (double& g : d_scores) g *= inv_norm;
        }
        if (sample.use_main) {
            auto lg = cross_entropy_loss(cls_logits(state.heads, cache.output), sample.label);
            out.main_sum += lg.loss;
            ++out.main_count;
            out.objective += weights.lambda * lg.loss * inv_norm;
            d_logits = std::move(lg.grad);
            for (double& g : d_logits) g *= weights.lambda * inv_norm;
        }
        if (grads != nullptr) backward(state, cache, d_scores, d_logits, *grads);
    }
    if (grads != nullptr) grads->finalize_touched();
    return out;
}

std::vector<std::span<double>> parameter_views(ModelState& s) {
    return {s.encoder.embedding.data, s.encoder.w1.data, s.encoder.b1,
            s.heads.w_nbr.data,       s.heads.w_cls.data, s.heads.b_cls};
}

std::vector<std::span<const double>> parameter_views(const ModelState& s) {
    return {s.encoder.embedding.data, s.encoder.w1.data, s.encoder.b1,
            s.heads.w_nbr.data,       s.heads.w_cls.data, s.heads.b_cls};
}

std::vector<std::span<const double>> gradient_views(const ModelGrads& g) {
    return {g.embedding.data, g.w1.data, g.b1, g.w_nbr.data, g.w_cls.data, g.b_cls};
}

std::vector<std::string_view> parameter_names() { return {"embedding", "w1", "b1", "w_nbr", "w_cls", "b_cls"}; }

ModelState init_round_heads(const ModelState& state, const HierLabelTree& hlt, int d, bool warm_start,
                            std::uint64_t seed) {
    if (d < 1 || d > hlt.depth()) throw ConfigError("init_round_heads: depth out of range");
    ModelState next = state;
    const std::size_t h = state.encoder.hidden_dim();
    const std::size_t k = hlt.num_clusters(d);
    Matrix w(h, k);
    const auto& prev = state.heads.w_nbr;
    if (warm_start && d > 1 && prev.rows == h && prev.cols == hlt.num_clusters(d - 1)) {
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < k; ++c) w(r, c) = prev(r, hlt.parent(static_cast<ClusterId>(c)));
    } else {
        Rng rng(derive_seed(seed, 201, static_cast<std::uint64_t>(d)));
        fill_uniform(w.data, 1.0 / std::sqrt(static_cast<double>(h)), rng);
    }
    next.heads.w_nbr = std::move(w);
    next.depth = d;
    return next;
}

namespace {

constexpr std::string_view kCheckpointMagic = "e2eg-checkpoint";

void write_f64(std::ostream& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    std::array<char, 8> bytes{};
    for (auto& b : bytes) {
        b = static_cast<char>(bits & 0xffU);
        bits >>= 8;
    }
    out.write(bytes.data(), bytes.size());
}

double read_f64(std::istream& in) {
    std::array<unsigned char, 8> bytes{};
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
        throw FormatError("checkpoint: truncated payload");
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[static_cast<std::size_t>(i)];
    return std::bit_cast<double>(bits);
}

}  // namespace

void write_checkpoint(const ModelState& s, std::ostream& out) {
    char dropout[64];
    std::snprintf(dropout, sizeof(dropout), "%.17g", s.encoder.dropout);
    out << kCheckpointMagic << " 1 vocab " << s.encoder.vocab_size() << " embed " << s.encoder.embed_dim()
        << " hidden " << s.encoder.hidden_dim() << " clusters " << s.num_clusters() << " classes "
        << s.num_classes() << " depth " << s.depth << " seed " << s.seed << " dropout " << dropout << '\n';
    for (const auto view : parameter_views(s))
        for (const double v : view) write_f64(out, v);
}

ModelState read_checkpoint(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw FormatError("checkpoint: missing header");
    std::istringstream fields(header);
    std::string magic, key;
    int version = 0;
    fields >> magic >> version;
    if (magic != kCheckpointMagic || version != 1) throw FormatError("checkpoint: unrecognized header");
    std::size_t vocab = 0, embed = 0, hidden = 0, clusters = 0, classes = 0;
    int depth = 0;
    std::uint64_t seed = 0;
    double dropout = 0.0;
    const auto expect = [&](std::string_view name, auto& value) {
        if (!(fields >> key >> value) || key != name) throw FormatError("checkpoint: malformed header field " + std::string(name));
    };
    expect("vocab", vocab);
    expect("embed", embed);
    expect("hidden", hidden);
    expect("clusters", clusters);
    expect("classes", classes);
    expect("depth", depth);
    expect("seed", seed);
    expect("dropout", dropout);

    ModelState s;
    s.depth = depth;
    s.seed = seed;
    s.encoder.dropout = dropout;
    s.encoder.embedding = Matrix(vocab, embed);
    s.encoder.w1 = Matrix(embed, hidden);
    s.encoder.b1.assign(hidden, 0.0);
    s.heads.w_nbr = Matrix(hidden, clusters);
    s.heads.w_cls = Matrix(hidden, classes);
    s.heads.b_cls.assign(classes, 0.0);
    for (auto view : parameter_views(s))
        for (double& v : view) v = read_f64(in);
    return s;
}

void save_checkpoint(const ModelState& state, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open checkpoint for writing: " + path.string());
    write_checkpoint(state, out);
}

ModelState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint: " + path.string());
    return read_checkpoint(in);
}

}  // namespace e2eg
