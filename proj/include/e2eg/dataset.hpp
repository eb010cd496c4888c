#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "e2eg/graph_corpus.hpp"
#include "e2eg/sparse_matrix.hpp"
#include "e2eg/text_features.hpp"

namespace e2eg {

struct FeatureConfig {
    std::size_t min_df = 1;
    std::size_t max_features = 20000;
};

/// A graph together with everything derived from its text: the shared
/// vocabulary, per-node token indices for the encoder, and TF-IDF rows for
/// clustering. Every model in an experiment consumes the same instance.
struct PreparedGraph {
    TextGraph graph;
    Vocabulary vocab;
    std::vector<std::vector<std::uint32_t>> tokens;
    SparseMatrix tfidf;

    std::size_t size() const { return graph.size(); }
};

PreparedGraph prepare_graph(TextGraph graph, const FeatureConfig& features);

}  // namespace e2eg
