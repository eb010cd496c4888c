#pragma once

#include <span>
#include <utility>
#include <vector>

#include "e2eg/graph_corpus.hpp"

namespace e2eg {

/// Fraction of `mask` nodes where preds == gold. Throws ConfigError on an empty mask.
double accuracy(std::span<const int> preds, std::span<const int> gold, std::span<const NodeId> mask);

/// Accuracy over the labeled nodes of one split; NaN when the split has none.
double split_accuracy(std::span<const int> preds, const TextGraph& graph, Split split);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

/// Arithmetic mean and sample (n-1) standard deviation; stddev is 0 for one value.
MeanStd aggregate(std::span<const double> values);

double median(std::vector<double> values);

}  // namespace e2eg
