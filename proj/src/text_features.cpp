#include "e2eg/text_features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "e2eg/errors.hpp"

namespace e2eg {

TokenSeq tokenize(std::string_view text) {
    TokenSeq out;
    std::string current;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::vector<TokenSeq> tokenize_all(std::span<const std::string> texts) {
    std::vector<TokenSeq> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(tokenize(t));
    return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> doc_freq)
    : tokens_(std::move(tokens)), doc_freq_(std::move(doc_freq)) {
    if (tokens_.size() != doc_freq_.size()) throw DimensionError("vocabulary: token/df length mismatch");
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (doc_freq_[i] < 1) throw DimensionError("vocabulary: document frequency must be >= 1");
        if (!index_.emplace(tokens_[i], static_cast<std::uint32_t>(i)).second)
            throw DimensionError("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::uint32_t> Vocabulary::encode(const TokenSeq& seq) const {
    std::vector<std::uint32_t> out;
    out.reserve(seq.size());
    for (const auto& tok : seq)
        if (const auto idx = find(tok)) out.push_back(*idx);
    return out;
}

std::uint64_t Vocabulary::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& tok : tokens_) {
        for (const char c : tok) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        h ^= 0xff;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Vocabulary build_vocab(std::span<const TokenSeq> corpus, std::size_t min_df, std::size_t max_features) {
    if (min_df < 1 || max_features < 1) throw ConfigError("build_vocab: min_df and max_features must be >= 1");
    std::map<std::string, std::size_t> df;
    for (const auto& doc : corpus) {
        const std::set<std::string> unique(doc.begin(), doc.end());
        for (const auto& tok : unique) ++df[tok];
    }
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (const auto& [tok, count] : df)
        if (count >= min_df) kept.emplace_back(tok, count);
    if (kept.empty()) throw ConfigError("build_vocab: no token reaches min_df");

    if (kept.size() > max_features) {
        std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
        kept.resize(max_features);
        std::sort(kept.begin(), kept.end());
    }
    std::vector<std::string> tokens;
    std::vector<std::size_t> freqs;
    for (auto& [tok, count] : kept) {
        tokens.push_back(std::move(tok));
        freqs.push_back(count);
    }
    return Vocabulary(std::move(tokens), std::move(freqs));
}

double smooth_idf(std::size_t corpus_size, std::size_t df) {
    return std::log((1.0 + static_cast<double>(corpus_size)) / (1.0 + static_cast<double>(df))) + 1.0;
}

SparseMatrix tfidf(std::span<const TokenSeq> corpus, const Vocabulary& vocab) {
    const std::size_t docs = corpus.size();
    std::vector<std::vector<std::uint32_t>> encoded(docs);
    std::vector<std::size_t> df(vocab.size(), 0);
    for (std::size_t d = 0; d < docs; ++d) {
        encoded[d] = vocab.encode(corpus[d]);
        std::vector<std::uint32_t> unique = encoded[d];
        std::sort(unique.begin(), unique.end());
        unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
        for (const auto t : unique) ++df[t];
    }

    std::vector<std::vector<SparseMatrix::Entry>> rows(docs);
    for (std::size_t d = 0; d < docs; ++d) {
        std::map<std::uint32_t, double> counts;
        for (const auto t : encoded[d]) counts[t] += 1.0;
        double norm_sq = 0.0;
        auto& row = rows[d];
        for (const auto& [t, c] : counts) {
            const double v = c * smooth_idf(docs, df[t]);
            row.emplace_back(t, v);
            norm_sq += v * v;
        }
        if (norm_sq > 0.0) {
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (auto& e : row) e.second *= inv;
        }
    }
    return SparseMatrix::from_rows(docs, vocab.size(), std::move(rows));
}

}  // namespace e2eg
