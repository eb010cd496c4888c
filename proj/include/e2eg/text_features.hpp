#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "e2eg/sparse_matrix.hpp"

namespace e2eg {

using TokenSeq = std::vector<std::string>;

/// Lowercases ASCII and splits on every run of non-alphanumeric bytes.
TokenSeq tokenize(std::string_view text);

std::vector<TokenSeq> tokenize_all(std::span<const std::string> texts);

/// Token <-> index mapping with per-token document frequency.
/// Indices follow lexicographic token order.
class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> doc_freq);

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(std::size_t index) const { return tokens_[index]; }
    std::size_t doc_freq(std::size_t index) const { return doc_freq_[index]; }
    std::span<const std::string> tokens() const { return tokens_; }

    std::optional<std::uint32_t> find(std::string_view token) const;

    /// Token indices for a sequence; out-of-vocabulary tokens are skipped.
    std::vector<std::uint32_t> encode(const TokenSeq& seq) const;

    std::uint64_t fingerprint() const;

    bool operator==(const Vocabulary& other) const {
        return tokens_ == other.tokens_ && doc_freq_ == other.doc_freq_;
    }

private:
    std::vector<std::string> tokens_;
    std::vector<std::size_t> doc_freq_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

/// Keeps tokens with df >= min_df, then the max_features most frequent
/// (ties broken lexicographically). Throws ConfigError when nothing survives.
Vocabulary build_vocab(std::span<const TokenSeq> corpus, std::size_t min_df, std::size_t max_features);

/// Smooth idf: ln((1 + N) / (1 + df)) + 1, where df is counted over `corpus`.
double smooth_idf(std::size_t corpus_size, std::size_t df);

/// Raw-count TF times smooth IDF, rows L2-normalized. Document frequencies are
/// recounted over `corpus` so the matrix is self-consistent for any vocab.
SparseMatrix tfidf(std::span<const TokenSeq> corpus, const Vocabulary& vocab);

}  // namespace e2eg
