#include "e2eg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "e2eg/errors.hpp"

namespace e2eg {

double accuracy(std::span<const int> preds, std::span<const int> gold, std::span<const NodeId> mask) {
    if (preds.size() != gold.size()) throw DimensionError("accuracy: preds and gold differ in length");
    if (mask.empty()) throw ConfigError("accuracy: empty mask");
    std::size_t correct = 0;
    for (const auto i : mask) {
        if (i >= preds.size()) throw DimensionError("accuracy: mask index out of range");
        correct += preds[i] == gold[i] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(mask.size());
}

double split_accuracy(std::span<const int> preds, const TextGraph& graph, Split split) {
    std::vector<NodeId> mask;
    std::vector<int> gold(graph.size(), -1);
    for (const auto i : graph.nodes_in(split)) {
        const int y = graph.label(i);
        if (y < 0) continue;
        gold[i] = y;
        mask.push_back(i);
    }
    if (mask.empty()) return std::numeric_limits<double>::quiet_NaN();
    return accuracy(preds, gold, mask);
}

MeanStd aggregate(std::span<const double> values) {
    if (values.empty()) throw ConfigError("aggregate: need at least one value");
    double sum = 0.0;
    for (const double v : values) sum += v;
    MeanStd out;
    out.mean = sum / static_cast<double>(values.size());
    const bool constant = std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
    if (constant) out.mean = values.front();
    if (values.size() > 1 && !constant) {
        double ss = 0.0;
        for (const double v : values) ss += (v - out.mean) * (v - out.mean);
        out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ConfigError("median: need at least one value");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace e2eg
