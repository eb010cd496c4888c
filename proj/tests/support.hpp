#pragma once

// Shared fixtures and brute-force oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "e2eg/dataset.hpp"
#include "e2eg/graph_corpus.hpp"
#include "e2eg/hlt.hpp"
#include "e2eg/model.hpp"
#include "e2eg/rng.hpp"
#include "e2eg/text_features.hpp"
#include "e2eg/trainer.hpp"

namespace e2eg::fixtures {

inline SynthSpec small_spec(std::size_t n, int classes) {
    SynthSpec spec;
    spec.n = n;
    spec.num_classes = classes;
    spec.p_in = 0.3;
    spec.p_out = 0.05;
    spec.vocab_per_class = 8;
    spec.shared_vocab = 12;
    spec.text_len = 6;
    spec.text_ambiguity = 0.4;
    return spec;
}

inline PreparedGraph prepared_synthetic(const SynthSpec& spec, std::uint64_t seed,
                                        std::array<double, 3> ratios = {0.5, 0.25, 0.25}) {
    return prepare_graph(split_nodes(generate_synthetic(spec, seed), ratios, seed), FeatureConfig{});
}

inline TextGraph graph_from_edges(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges,
                                  std::vector<int> labels = {}, int classes = 0) {
    std::vector<std::string> texts(n, "x");
    return TextGraph(std::move(texts), symmetric_adjacency(n, edges), std::move(labels), classes,
                     std::vector<Split>(n, Split::train));
}

/// Erdos-Renyi edge list.
inline std::vector<std::pair<NodeId, NodeId>> random_edges(std::size_t n, double p, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j)
            if (rng.bernoulli(p)) edges.emplace_back(i, j);
    return edges;
}

/// Dense random L2-normalized nonnegative rows, stored sparse; about half the entries zero.
inline SparseMatrix random_features(std::size_t n, std::size_t f, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<SparseMatrix::Entry>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        double norm = 0.0;
        for (std::uint32_t c = 0; c < f; ++c) {
            if (rng.bernoulli(0.5)) continue;
            const double v = rng.uniform(0.1, 1.0);
            rows[i].emplace_back(c, v);
            norm += v * v;
        }
        if (rows[i].empty()) {
            rows[i].emplace_back(static_cast<std::uint32_t>(i % f), 1.0);
            norm = 1.0;
        }
        for (auto& e : rows[i]) e.second /= std::sqrt(norm);
    }
    return SparseMatrix::from_rows(n, f, std::move(rows));
}

/// Breadth-first search written against a dense adjacency matrix.
inline std::vector<NodeId> brute_k_hop(const TextGraph& g, NodeId node, int k) {
    const std::size_t n = g.size();
    std::vector<std::vector<bool>> dense(n, std::vector<bool>(n, false));
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = 0; j < n; ++j) dense[i][j] = g.adjacency().at(i, j) != 0.0;
    std::set<NodeId> frontier{node}, seen{node};
    for (int step = 0; step < k; ++step) {
        std::set<NodeId> next;
        for (const auto u : frontier)
            for (NodeId v = 0; v < n; ++v)
                if (dense[u][v] && !seen.count(v)) next.insert(v);
        seen.insert(next.begin(), next.end());
        frontier = std::move(next);
    }
    seen.erase(node);
    return {seen.begin(), seen.end()};
}

/// Dense TF-IDF computed straight from the formula.
inline std::vector<std::vector<double>> brute_tfidf(const std::vector<TokenSeq>& corpus, const Vocabulary& vocab) {
    const std::size_t n = corpus.size();
    std::vector<std::vector<double>> out(n, std::vector<double>(vocab.size(), 0.0));
    for (std::size_t t = 0; t < vocab.size(); ++t) {
        std::size_t df = 0;
        for (const auto& doc : corpus)
            if (std::find(doc.begin(), doc.end(), vocab.token(t)) != doc.end()) ++df;
        const double idf = std::log((1.0 + static_cast<double>(n)) / (1.0 + static_cast<double>(df))) + 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto count = std::count(corpus[i].begin(), corpus[i].end(), vocab.token(t));
            out[i][t] = static_cast<double>(count) * idf;
        }
    }
    for (auto& row : out) {
        double norm = 0.0;
        for (const double v : row) norm += v * v;
        if (norm > 0.0)
            for (double& v : row) v /= std::sqrt(norm);
    }
    return out;
}

/// Target bits by the double loop over (node, neighbor).
inline std::vector<std::vector<int>> brute_targets(const SparseMatrix& adj, const HierLabelTree& hlt, int d) {
    const auto assign = hlt.assignment(d);
    const std::size_t n = adj.rows();
    std::vector<std::vector<int>> bits(n, std::vector<int>(hlt.num_clusters(d), 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (adj.at(i, j) != 0.0) bits[i][assign[j]] = 1;
    return bits;
}

/// Samples over every node with neighborhood targets at `d` and both losses on.
struct SampleSet {
    NeighborhoodTarget targets;
    std::vector<int> labels;
    std::vector<Sample> samples;
};

inline SampleSet all_node_samples(const PreparedGraph& data, const HierLabelTree& hlt, int d) {
    SampleSet set;
    set.targets = project_targets(data.graph.adjacency(), hlt, d);
    set.labels.resize(data.size());
    for (NodeId i = 0; i < data.size(); ++i) set.labels[i] = data.graph.label(i);
    for (NodeId i = 0; i < data.size(); ++i) {
        Sample s;
        s.tokens = data.tokens[i];
        s.positives = set.targets.row(i).indices;
        s.label = set.labels[i];
        s.use_nbr = true;
        s.use_main = s.label >= 0;
        set.samples.push_back(s);
    }
    return set;
}

inline ModelState small_model(const PreparedGraph& data, const HierLabelTree& hlt, int d, std::uint64_t seed,
                              double dropout = 0.0) {
    ModelDims dims;
    dims.vocab_size = data.vocab.size();
    dims.embed_dim = 6;
    dims.hidden_dim = 5;
    dims.num_classes = static_cast<std::size_t>(data.graph.num_classes());
    dims.dropout = dropout;
    auto state = init_model(dims, seed);
    state = init_round_heads(state, hlt, d, false, seed);
    // Nonzero biases so that ReLU units are not all inactive for empty inputs.
    Rng rng(derive_seed(seed, 999));
    for (double& b : state.encoder.b1) b = rng.uniform(-0.3, 0.3);
    for (double& b : state.heads.b_cls) b = rng.uniform(-0.3, 0.3);
    for (double& w : state.encoder.embedding.data) w = rng.normal(0.0, 0.5);
    return state;
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    std::size_t checked = 0;
};

/// Compares analytic composite gradients to central differences over every
/// parameter, error measured as |a - fd| / max(1, |a|).
inline GradCheck finite_difference_check(const ModelState& state, std::span<const Sample> batch,
                                         const LossWeights& weights, double step) {
    auto grads = ModelGrads::zeros_like(state);
    composite_batch(state, batch, weights, nullptr, &grads);
    const auto analytic = gradient_views(grads);
    const auto names = parameter_names();

    GradCheck out;
    ModelState probe = state;
    auto params = parameter_views(probe);
    for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t k = 0; k < params[t].size(); ++k) {
            const double saved = params[t][k];
            params[t][k] = saved + step;
            const double up = composite_batch(probe, batch, weights, nullptr, nullptr).objective;
            params[t][k] = saved - step;
            const double down = composite_batch(probe, batch, weights, nullptr, nullptr).objective;
            params[t][k] = saved;
            const double fd = (up - down) / (2.0 * step);
            const double a = analytic[t][k];
            const double err = std::abs(a - fd) / std::max(1.0, std::abs(a));
            if (err > out.max_rel_error) {
                out.max_rel_error = err;
                out.worst_tensor = std::string(names[t]);
            }
            ++out.checked;
        }
    }
    return out;
}

}  // namespace e2eg::fixtures
