#include "e2eg/graph_corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "e2eg/errors.hpp"
#include "e2eg/rng.hpp"

namespace e2eg {
namespace {

thread_local std::size_t g_label_reads = 0;

std::int64_t parse_int(std::string_view field, const char* what, std::size_t line_no) {
    std::int64_t value = 0;
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end || field.empty()) {
        throw FormatError("line " + std::to_string(line_no) + ": " + what + " is not an integer: '" +
                          std::string(field) + "'");
    }
    return value;
}

std::vector<std::string_view> split_tabs(std::string_view line, std::size_t max_fields) {
    std::vector<std::string_view> fields;
    while (fields.size() + 1 < max_fields) {
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos) break;
        fields.push_back(line.substr(0, tab));
        line.remove_prefix(tab + 1);
    }
    fields.push_back(line);
    return fields;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::valid: return "valid";
        case Split::test: return "test";
    }
    return "train";
}

Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "valid") return Split::valid;
    if (s == "test") return Split::test;
    throw FormatError("unknown split tag '" + std::string(s) + "'");
}

std::size_t label_reads() { return g_label_reads; }
void reset_label_reads() { g_label_reads = 0; }

TextGraph::TextGraph(std::vector<std::string> texts, SparseMatrix adjacency, std::vector<int> labels,
                     int num_classes, std::vector<Split> split)
    : texts_(std::move(texts)),
      adjacency_(std::move(adjacency)),
      labels_(std::move(labels)),
      num_classes_(num_classes),
      split_(std::move(split)) {
    const std::size_t n = texts_.size();
    if (adjacency_.rows() != n || adjacency_.cols() != n)
        throw DimensionError("graph: adjacency must be n x n");
    if (!labels_.empty() && labels_.size() != n) throw DimensionError("graph: labels length must be n");
    if (split_.size() != n) throw DimensionError("graph: split length must be n");
    for (const int y : labels_) {
        if (y < -1 || y >= num_classes_) throw DimensionError("graph: label outside [-1, C)");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = adjacency_.row(i);
        for (std::size_t k = 0; k < row.size(); ++k) {
            const auto j = row.indices[k];
            if (j == i) throw DimensionError("graph: adjacency diagonal must be zero");
            if (row.values[k] != 1.0) throw DimensionError("graph: adjacency entries must be 1");
            if (adjacency_.at(j, i) != 1.0) throw DimensionError("graph: adjacency must be symmetric");
        }
    }
}

int TextGraph::label(NodeId i) const {
    ++g_label_reads;
    return labels_.empty() ? -1 : labels_[i];
}

std::vector<NodeId> TextGraph::nodes_in(Split s) const {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < split_.size(); ++i)
        if (split_[i] == s) out.push_back(static_cast<NodeId>(i));
    return out;
}

TextGraph TextGraph::with_split(std::vector<Split> split) const {
    return TextGraph(texts_, adjacency_, labels_, num_classes_, std::move(split));
}

TextGraph TextGraph::with_induced_edges(const std::vector<bool>& keep) const {
    if (keep.size() != size()) throw DimensionError("with_induced_edges: mask length must be n");
    std::vector<std::vector<SparseMatrix::Entry>> rows(size());
    for (std::size_t i = 0; i < size(); ++i) {
        if (!keep[i]) continue;
        for (const auto j : neighbors(static_cast<NodeId>(i)))
            if (keep[j]) rows[i].emplace_back(j, 1.0);
    }
    return TextGraph(texts_, SparseMatrix::from_rows(size(), size(), std::move(rows)), labels_, num_classes_, split_);
}

SparseMatrix symmetric_adjacency(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges) {
    std::vector<std::vector<SparseMatrix::Entry>> rows(n);
    for (const auto& [u, v] : edges) {
        if (u >= n || v >= n) throw DimensionError("edge endpoint out of range");
        if (u == v) continue;
        rows[u].emplace_back(v, 1.0);
        rows[v].emplace_back(u, 1.0);
    }
    for (auto& row : rows) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end(),
                              [](const auto& a, const auto& b) { return a.first == b.first; }),
                  row.end());
    }
    return SparseMatrix::from_rows(n, n, std::move(rows));
}

TextGraph read_graph(std::istream& nodes, std::istream& edges) {
    struct Record {
        Split split;
        int label;
        std::string text;
    };
    std::vector<std::pair<std::int64_t, Record>> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(nodes, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_tabs(line, 4);
        if (fields.size() != 4)
            throw FormatError("nodes line " + std::to_string(line_no) + ": expected id<TAB>split<TAB>label<TAB>text");
        const auto id = parse_int(fields[0], "node id", line_no);
        const Split split = parse_split(fields[1]);
        const auto label = parse_int(fields[2], "label", line_no);
        if (label < -1) throw FormatError("nodes line " + std::to_string(line_no) + ": label below -1");
        records.emplace_back(id, Record{split, static_cast<int>(label), std::string(fields[3])});
    }

    const std::size_t n = records.size();
    std::vector<std::string> texts(n);
    std::vector<int> labels(n, -1);
    std::vector<Split> split(n, Split::train);
    std::vector<bool> seen(n, false);
    int max_label = -1;
    for (auto& [id, rec] : records) {
        if (id < 0 || static_cast<std::size_t>(id) >= n)
            throw FormatError("node id " + std::to_string(id) + " outside [0, " + std::to_string(n) + ")");
        const auto i = static_cast<std::size_t>(id);
        if (seen[i]) throw FormatError("duplicate node id " + std::to_string(id));
        seen[i] = true;
        texts[i] = std::move(rec.text);
        labels[i] = rec.label;
        split[i] = rec.split;
        max_label = std::max(max_label, rec.label);
    }

    std::vector<std::pair<NodeId, NodeId>> edge_list;
    line_no = 0;
    while (std::getline(edges, line)) {
        ++line_no;
        strip_cr(line);
        std::istringstream fields(line);
        std::string a, b, extra;
        if (!(fields >> a)) continue;
        if (!(fields >> b) || (fields >> extra))
            throw FormatError("edges line " + std::to_string(line_no) + ": expected `src dst`");
        const auto u = parse_int(a, "edge source", line_no);
        const auto v = parse_int(b, "edge target", line_no);
        if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n)
            throw FormatError("edges line " + std::to_string(line_no) + ": endpoint out of range");
        edge_list.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }

    const bool any_label = max_label >= 0;
    return TextGraph(std::move(texts), symmetric_adjacency(n, edge_list), any_label ? std::move(labels) : std::vector<int>{},
                     max_label + 1, std::move(split));
}

TextGraph load_graph(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path) {
    std::ifstream nodes(nodes_path);
    if (!nodes) throw FormatError("cannot open nodes file " + nodes_path.string());
    std::ifstream edges(edges_path);
    if (!edges) throw FormatError("cannot open edges file " + edges_path.string());
    return read_graph(nodes, edges);
}

void write_graph(const TextGraph& graph, std::ostream& nodes, std::ostream& edges) {
    for (NodeId i = 0; i < graph.size(); ++i) {
        nodes << i << '\t' << to_string(graph.split(i)) << '\t' << graph.label(i) << '\t' << graph.text(i) << '\n';
    }
    for (NodeId i = 0; i < graph.size(); ++i) {
        for (const auto j : graph.neighbors(i))
            if (i < j) edges << i << '\t' << j << '\n';
    }
}

void save_graph(const TextGraph& graph, const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path) {
    std::ofstream nodes(nodes_path);
    std::ofstream edges(edges_path);
    if (!nodes || !edges) throw FormatError("cannot open graph output files for writing");
    write_graph(graph, nodes, edges);
}

void SynthSpec::validate() const {
    if (n == 0 || num_classes <= 0 || vocab_per_class == 0 || shared_vocab == 0 || text_len == 0)
        throw ConfigError("synthetic spec: all counts must be positive");
    if (!(0.0 <= p_out && p_out <= p_in && p_in <= 1.0)) throw ConfigError("synthetic spec: need 0 <= p_out <= p_in <= 1");
    if (!(0.0 <= text_ambiguity && text_ambiguity <= 1.0))
        throw ConfigError("synthetic spec: text_ambiguity must lie in [0, 1]");
}

TextGraph generate_synthetic(const SynthSpec& spec, std::uint64_t seed) {
    spec.validate();
    const std::size_t n = spec.n;
    const auto classes = static_cast<std::size_t>(spec.num_classes);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % classes);

    Rng edge_rng(derive_seed(seed, 1));
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double p = labels[i] == labels[j] ? spec.p_in : spec.p_out;
            if (edge_rng.bernoulli(p)) edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
        }
    }

    Rng text_rng(derive_seed(seed, 2));
    std::vector<std::string> texts(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string text;
        for (std::size_t t = 0; t < spec.text_len; ++t) {
            if (t) text += ' ';
            if (text_rng.bernoulli(spec.text_ambiguity)) {
                text += "s" + std::to_string(text_rng.below(spec.shared_vocab));
            } else {
                text += "c" + std::to_string(labels[i]) + "w" + std::to_string(text_rng.below(spec.vocab_per_class));
            }
        }
        texts[i] = std::move(text);
    }

    return TextGraph(std::move(texts), symmetric_adjacency(n, edges), std::move(labels), spec.num_classes,
                     std::vector<Split>(n, Split::train));
}

TextGraph split_nodes(const TextGraph& graph, std::array<double, 3> ratios, std::uint64_t seed) {
    for (const double r : ratios)
        if (!(r >= 0.0)) throw ConfigError("split ratios must be nonnegative");
    if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

    const std::size_t n = graph.size();
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), NodeId{0});
    Rng rng(derive_seed(seed, 3));
    rng.shuffle(std::span(order));

    const auto n_train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n))));
    const auto n_valid =
        std::min<std::size_t>(n - n_train, static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n))));
    std::vector<Split> split(n, Split::test);
    for (std::size_t k = 0; k < n; ++k) {
        split[order[k]] = k < n_train ? Split::train : (k < n_train + n_valid ? Split::valid : Split::test);
    }
    return graph.with_split(std::move(split));
}

std::vector<NodeId> k_hop_neighborhood(const TextGraph& graph, NodeId node, int k) {
    if (node >= graph.size()) throw DimensionError("k_hop_neighborhood: node out of range");
    if (k < 1) throw ConfigError("k_hop_neighborhood: k must be >= 1");
    std::vector<int> dist(graph.size(), -1);
    dist[node] = 0;
    std::vector<NodeId> frontier{node};
    for (int hop = 1; hop <= k && !frontier.empty(); ++hop) {
        std::vector<NodeId> next;
        for (const auto u : frontier) {
            for (const auto v : graph.neighbors(u)) {
                if (dist[v] < 0) {
                    dist[v] = hop;
                    next.push_back(v);
                }
            }
        }
        frontier = std::move(next);
    }
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < graph.size(); ++i)
        if (dist[i] > 0) out.push_back(static_cast<NodeId>(i));
    return out;
}

std::uint64_t split_fingerprint(const TextGraph& graph) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto s : graph.splits()) {
        h ^= static_cast<std::uint64_t>(s) + 1;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace e2eg
