#include "e2eg/sparse_matrix.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "e2eg/errors.hpp"

namespace e2eg {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), offsets_(rows + 1, 0) {}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
                           std::vector<std::uint32_t> indices, std::vector<double> values)
    : rows_(rows), cols_(cols), offsets_(std::move(offsets)), indices_(std::move(indices)), values_(std::move(values)) {
    validate();
}

SparseMatrix SparseMatrix::from_rows(std::size_t rows, std::size_t cols, std::vector<std::vector<Entry>> entries) {
    if (entries.size() != rows) throw DimensionError("from_rows: entry list count does not match row count");
    std::vector<std::size_t> offsets(rows + 1, 0);
    std::vector<std::uint32_t> indices;
    std::vector<double> values;
    for (std::size_t r = 0; r < rows; ++r) {
        auto& row = entries[r];
        std::sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.first < b.first; });
        for (const auto& [c, v] : row) {
            indices.push_back(c);
            values.push_back(v);
        }
        offsets[r + 1] = indices.size();
    }
    return SparseMatrix(rows, cols, std::move(offsets), std::move(indices), std::move(values));
}

void SparseMatrix::validate() const {
    if (offsets_.size() != rows_ + 1) throw DimensionError("sparse matrix: offsets length must be rows+1");
    if (offsets_.front() != 0 || offsets_.back() != indices_.size())
        throw DimensionError("sparse matrix: offsets do not span the index array");
    if (indices_.size() != values_.size()) throw DimensionError("sparse matrix: indices/values length mismatch");
    for (std::size_t r = 0; r < rows_; ++r) {
        if (offsets_[r] > offsets_[r + 1]) throw DimensionError("sparse matrix: offsets must be nondecreasing");
        for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
            if (indices_[k] >= cols_) throw DimensionError("sparse matrix: column index out of range");
            if (k > offsets_[r] && indices_[k] <= indices_[k - 1])
                throw DimensionError("sparse matrix: column indices must be strictly increasing within a row");
        }
    }
}

SparseRow SparseMatrix::row(std::size_t r) const {
    const std::size_t begin = offsets_[r];
    const std::size_t len = offsets_[r + 1] - begin;
    return SparseRow{std::span<const std::uint32_t>(indices_).subspan(begin, len),
                     std::span<const double>(values_).subspan(begin, len)};
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
    const auto view = row(r);
    const auto it = std::lower_bound(view.indices.begin(), view.indices.end(), static_cast<std::uint32_t>(c));
    if (it == view.indices.end() || *it != c) return 0.0;
    return view.values[static_cast<std::size_t>(it - view.indices.begin())];
}

void SparseMatrix::write_text(std::ostream& out) const {
    out << rows_ << ' ' << cols_ << ' ' << nnz() << '\n';
    char buf[64];
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", values_[k]);
            out << r << ' ' << indices_[k] << ' ' << buf << '\n';
        }
    }
}

SparseMatrix SparseMatrix::read_text(std::istream& in) {
    std::size_t rows = 0, cols = 0, nnz = 0;
    if (!(in >> rows >> cols >> nnz)) throw FormatError("sparse matrix: missing `rows cols nnz` header");
    std::vector<std::vector<Entry>> entries(rows);
    for (std::size_t k = 0; k < nnz; ++k) {
        std::size_t r = 0, c = 0;
        double v = 0.0;
        if (!(in >> r >> c >> v)) throw FormatError("sparse matrix: truncated triple list");
        if (r >= rows || c >= cols) throw FormatError("sparse matrix: triple out of range");
        entries[r].emplace_back(static_cast<std::uint32_t>(c), v);
    }
    try {
        return from_rows(rows, cols, std::move(entries));
    } catch (const DimensionError& e) {
        throw FormatError(e.what());
    }
}

double dot(const SparseRow& row, std::span<const double> dense) {
    double acc = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) acc += row.values[k] * dense[row.indices[k]];
    return acc;
}

}  // namespace e2eg
