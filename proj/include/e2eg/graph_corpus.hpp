#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "e2eg/sparse_matrix.hpp"

namespace e2eg {

using NodeId = std::uint32_t;

enum class Split : std::uint8_t { train, valid, test };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

/// Number of label reads performed through TextGraph::label on this thread.
/// Lets callers prove that a code path never touched supervision.
std::size_t label_reads();
void reset_label_reads();

/// Undirected graph whose nodes carry raw text and optional class labels.
///
/// Immutable after construction. The constructor enforces that adjacency is a
/// square, symmetric, zero-diagonal binary matrix and that per-node arrays
/// have length n. Labels are -1 for unlabeled nodes.
class TextGraph {
public:
    TextGraph() = default;
    TextGraph(std::vector<std::string> texts, SparseMatrix adjacency, std::vector<int> labels, int num_classes,
              std::vector<Split> split);

    std::size_t size() const { return texts_.size(); }
    const std::string& text(NodeId i) const { return texts_[i]; }
    std::span<const std::string> texts() const { return texts_; }

    const SparseMatrix& adjacency() const { return adjacency_; }
    std::span<const std::uint32_t> neighbors(NodeId i) const { return adjacency_.row(i).indices; }
    std::size_t degree(NodeId i) const { return adjacency_.row(i).size(); }

    bool has_labels() const { return !labels_.empty(); }
    /// Class id in [0, C) or -1. Every call is counted by label_reads().
    int label(NodeId i) const;
    int num_classes() const { return num_classes_; }

    Split split(NodeId i) const { return split_[i]; }
    std::span<const Split> splits() const { return split_; }
    std::vector<NodeId> nodes_in(Split s) const;

    TextGraph with_split(std::vector<Split> split) const;
    /// Same nodes; keeps only edges whose endpoints both satisfy `keep`.
    TextGraph with_induced_edges(const std::vector<bool>& keep) const;

    bool operator==(const TextGraph&) const = default;

private:
    std::vector<std::string> texts_;
    SparseMatrix adjacency_;
    std::vector<int> labels_;
    int num_classes_ = 0;
    std::vector<Split> split_;
};

/// Symmetric binary adjacency from an undirected edge list; duplicates collapse, self-loops drop.
SparseMatrix symmetric_adjacency(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges);

/// Nodes file: `id<TAB>split<TAB>label<TAB>text`. Edges file: `src dst` per line.
TextGraph load_graph(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path);
TextGraph read_graph(std::istream& nodes, std::istream& edges);
void write_graph(const TextGraph& graph, std::ostream& nodes, std::ostream& edges);
void save_graph(const TextGraph& graph, const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path);

/// Planted-partition generator parameters.
struct SynthSpec {
    std::size_t n = 600;
    int num_classes = 4;
    double p_in = 0.1;
    double p_out = 0.005;
    std::size_t vocab_per_class = 50;
    std::size_t shared_vocab = 200;
    std::size_t text_len = 10;
    double text_ambiguity = 0.7;

    void validate() const;
};

/// Nodes are assigned to classes round-robin; all nodes start in the train split.
TextGraph generate_synthetic(const SynthSpec& spec, std::uint64_t seed);

/// Seeded shuffle, then contiguous train/valid/test assignment.
TextGraph split_nodes(const TextGraph& graph, std::array<double, 3> ratios, std::uint64_t seed);

/// Nodes within k hops of `node`, excluding the node itself, in ascending order.
std::vector<NodeId> k_hop_neighborhood(const TextGraph& graph, NodeId node, int k);

/// FNV-1a over the split tags; identifies a split in history files.
std::uint64_t split_fingerprint(const TextGraph& graph);

}  // namespace e2eg
