#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "e2eg/graph_corpus.hpp"
#include "e2eg/sparse_matrix.hpp"

namespace e2eg {

using ClusterId = std::uint32_t;

/// Hierarchical label tree over the node set.
///
/// Depth d (1-based) partitions the nodes into branching^d clusters. Child
/// cluster ids are `parent * branching + j`, so the parent link is integer
/// division and refinement consistency is structural.
class HierLabelTree {
public:
    HierLabelTree() = default;
    HierLabelTree(int branching, std::vector<std::vector<ClusterId>> assignments);

    int branching() const { return branching_; }
    int depth() const { return static_cast<int>(assignments_.size()); }
    std::size_t num_nodes() const { return assignments_.empty() ? 0 : assignments_.front().size(); }

    /// branching^d.
    std::size_t num_clusters(int d) const;
    /// Node -> cluster map at depth d in [1, depth()].
    std::span<const ClusterId> assignment(int d) const;
    ClusterId parent(ClusterId child) const { return child / static_cast<ClusterId>(branching_); }

    bool operator==(const HierLabelTree&) const = default;

    /// One line per depth, space-separated assignment; first line `branching depth n`.
    void write_text(std::ostream& out) const;
    static HierLabelTree read_text(std::istream& in);

private:
    int branching_ = 2;
    std::vector<std::vector<ClusterId>> assignments_;
};

struct BalancedSplit {
    std::vector<NodeId> left;
    std::vector<NodeId> right;
};

/// Balanced spherical 2-means over `members` (rows of `features`).
/// Left receives ceil(m/2) members; deterministic given `seed`.
BalancedSplit balanced_split(const SparseMatrix& features, std::span<const NodeId> members, std::uint64_t seed);

inline constexpr int kBalancedSplitMaxIterations = 20;

/// Recursive balanced clustering; branching must be a power of two and
/// branching^depth <= n. Throws ConfigError otherwise.
HierLabelTree build_hlt(const SparseMatrix& features, int branching, int depth, std::uint64_t seed);

/// Multi-label neighborhood targets at one depth: binary n x branching^d
/// matrix whose bit (i, c) is set iff a neighbor of i lies in cluster c.
struct NeighborhoodTarget {
    int depth = 0;
    SparseMatrix bits;

    SparseRow row(NodeId i) const { return bits.row(i); }
    std::size_t num_labels() const { return bits.cols(); }
};

NeighborhoodTarget project_targets(const SparseMatrix& adjacency, const HierLabelTree& hlt, int d);

}  // namespace e2eg
