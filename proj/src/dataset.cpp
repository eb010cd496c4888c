#include "e2eg/dataset.hpp"

namespace e2eg {

PreparedGraph prepare_graph(TextGraph graph, const FeatureConfig& features) {
    const auto corpus = tokenize_all(graph.texts());
    PreparedGraph out;
    out.vocab = build_vocab(corpus, features.min_df, features.max_features);
    out.tfidf = tfidf(corpus, out.vocab);
    out.tokens.reserve(corpus.size());
    for (const auto& doc : corpus) out.tokens.push_back(out.vocab.encode(doc));
    out.graph = std::move(graph);
    return out;
}

}  // namespace e2eg
