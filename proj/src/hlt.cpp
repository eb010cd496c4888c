#include "e2eg/hlt.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "e2eg/errors.hpp"
#include "e2eg/rng.hpp"

namespace e2eg {
namespace {

bool is_power_of_two(int x) { return x >= 2 && (x & (x - 1)) == 0; }

std::vector<double> dense_row(const SparseMatrix& m, NodeId r) {
    std::vector<double> out(m.cols(), 0.0);
    const auto row = m.row(r);
    for (std::size_t k = 0; k < row.size(); ++k) out[row.indices[k]] = row.values[k];
    return out;
}

void normalized_mean(const SparseMatrix& m, std::span<const NodeId> ids, std::vector<double>& centroid) {
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (const auto id : ids) {
        const auto row = m.row(id);
        for (std::size_t k = 0; k < row.size(); ++k) centroid[row.indices[k]] += row.values[k];
    }
    double norm_sq = 0.0;
    for (const double v : centroid) norm_sq += v * v;
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& v : centroid) v *= inv;
    }
}

}  // namespace

HierLabelTree::HierLabelTree(int branching, std::vector<std::vector<ClusterId>> assignments)
    : branching_(branching), assignments_(std::move(assignments)) {
    if (branching_ < 2) throw ConfigError("hlt: branching must be >= 2");
    if (assignments_.empty()) throw ConfigError("hlt: depth must be >= 1");
    for (int d = 1; d <= depth(); ++d) {
        const auto& level = assignments_[static_cast<std::size_t>(d - 1)];
        if (level.size() != num_nodes()) throw DimensionError("hlt: every depth must assign every node");
        for (const auto c : level)
            if (c >= num_clusters(d)) throw DimensionError("hlt: cluster id out of range");
    }
}

std::size_t HierLabelTree::num_clusters(int d) const {
    std::size_t k = 1;
    for (int i = 0; i < d; ++i) k *= static_cast<std::size_t>(branching_);
    return k;
}

std::span<const ClusterId> HierLabelTree::assignment(int d) const {
    if (d < 1 || d > depth()) throw ConfigError("hlt: depth " + std::to_string(d) + " out of range");
    return assignments_[static_cast<std::size_t>(d - 1)];
}

void HierLabelTree::write_text(std::ostream& out) const {
    out << branching_ << ' ' << depth() << ' ' << num_nodes() << '\n';
    for (const auto& level : assignments_) {
        for (std::size_t i = 0; i < level.size(); ++i) out << (i ? " " : "") << level[i];
        out << '\n';
    }
}

HierLabelTree HierLabelTree::read_text(std::istream& in) {
    int branching = 0, depth = 0;
    std::size_t n = 0;
    if (!(in >> branching >> depth >> n)) throw FormatError("hlt: missing `branching depth n` header");
    if (depth < 1) throw FormatError("hlt: depth must be >= 1");
    std::vector<std::vector<ClusterId>> levels(static_cast<std::size_t>(depth), std::vector<ClusterId>(n));
    for (auto& level : levels)
        for (auto& c : level)
            if (!(in >> c)) throw FormatError("hlt: truncated assignment");
    try {
        return HierLabelTree(branching, std::move(levels));
    } catch (const std::exception& e) {
        throw FormatError(e.what());
    }
}

BalancedSplit balanced_split(const SparseMatrix& features, std::span<const NodeId> members, std::uint64_t seed) {
    const std::size_t m = members.size();
    if (m < 2) throw ConfigError("balanced_split: need at least two members");

    std::vector<NodeId> shuffled(members.begin(), members.end());
    Rng rng(seed);
    rng.shuffle(std::span(shuffled));
    std::vector<double> c_left = dense_row(features, shuffled.front());
    std::vector<double> c_right = dense_row(features, shuffled.back());

    struct Scored {
        double margin;
        NodeId id;
    };
    std::vector<Scored> scored(m);
    const std::size_t n_left = (m + 1) / 2;
    std::vector<NodeId> left, right, prev_left;

    for (int iter = 0; iter < kBalancedSplitMaxIterations; ++iter) {
        for (std::size_t k = 0; k < m; ++k) {
            const auto row = features.row(members[k]);
            scored[k] = {dot(row, c_left) - dot(row, c_right), members[k]};
        }
        std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
            if (a.margin != b.margin) return a.margin > b.margin;
            return a.id < b.id;
        });
        left.clear();
        right.clear();
        for (std::size_t k = 0; k < m; ++k) (k < n_left ? left : right).push_back(scored[k].id);
        std::sort(left.begin(), left.end());
        std::sort(right.begin(), right.end());
        if (left == prev_left) break;
        prev_left = left;
        normalized_mean(features, left, c_left);
        normalized_mean(features, right, c_right);
    }
    return {std::move(left), std::move(right)};
}

HierLabelTree build_hlt(const SparseMatrix& features, int branching, int depth, std::uint64_t seed) {
    if (!is_power_of_two(branching)) throw ConfigError("build_hlt: branching must be a power of two >= 2");
    if (depth < 1) throw ConfigError("build_hlt: depth must be >= 1");
    const std::size_t n = features.rows();
    const int bits_per_level = std::countr_zero(static_cast<unsigned>(branching));
    const int binary_levels = bits_per_level * depth;
    if (binary_levels >= 63 || (std::size_t{1} << binary_levels) > n)
        throw ConfigError("build_hlt: branching^depth exceeds node count");

    std::vector<std::vector<NodeId>> clusters(1);
    clusters[0].resize(n);
    std::iota(clusters[0].begin(), clusters[0].end(), NodeId{0});

    std::vector<std::vector<ClusterId>> assignments;
    for (int level = 1; level <= binary_levels; ++level) {
        std::vector<std::vector<NodeId>> next(clusters.size() * 2);
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            auto halves = balanced_split(features, clusters[c], derive_seed(seed, static_cast<std::uint64_t>(level), c));
            next[2 * c] = std::move(halves.left);
            next[2 * c + 1] = std::move(halves.right);
        }
        clusters = std::move(next);
        if (level % bits_per_level == 0) {
            std::vector<ClusterId> assign(n);
            for (std::size_t c = 0; c < clusters.size(); ++c)
                for (const auto id : clusters[c]) assign[id] = static_cast<ClusterId>(c);
            assignments.push_back(std::move(assign));
        }
    }
    return HierLabelTree(branching, std::move(assignments));
}

NeighborhoodTarget project_targets(const SparseMatrix& adjacency, const HierLabelTree& hlt, int d) {
    const auto assign = hlt.assignment(d);
    if (adjacency.rows() != assign.size() || adjacency.cols() != assign.size())
        throw DimensionError("project_targets: adjacency size does not match the tree");
    const std::size_t n = adjacency.rows();
    std::vector<std::vector<SparseMatrix::Entry>> rows(n);
    std::vector<ClusterId> hits;
    for (std::size_t i = 0; i < n; ++i) {
        hits.clear();
        for (const auto j : adjacency.row(i).indices) hits.push_back(assign[j]);
        std::sort(hits.begin(), hits.end());
        hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
        for (const auto c : hits) rows[i].emplace_back(c, 1.0);
    }
    return {d, SparseMatrix::from_rows(n, hlt.num_clusters(d), std::move(rows))};
}

}  // namespace e2eg
