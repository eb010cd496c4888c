#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace e2eg {

/// Read-only view of one CSR row.
struct SparseRow {
    std::span<const std::uint32_t> indices;
    std::span<const double> values;

    std::size_t size() const { return indices.size(); }
    bool empty() const { return indices.empty(); }
};

/// Compressed sparse-row matrix of doubles.
///
/// Column indices are strictly increasing inside each row; every constructor
/// path validates this so downstream merge-style loops can rely on it.
class SparseMatrix {
public:
    using Entry = std::pair<std::uint32_t, double>;

    SparseMatrix() : offsets_{0} {}
    SparseMatrix(std::size_t rows, std::size_t cols);

    /// Builds from raw CSR arrays; throws DimensionError on any invariant violation.
    SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
                 std::vector<std::uint32_t> indices, std::vector<double> values);

    /// Builds from per-row entry lists. Entries within a row are sorted here;
    /// a repeated column is a DimensionError.
    static SparseMatrix from_rows(std::size_t rows, std::size_t cols, std::vector<std::vector<Entry>> entries);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return indices_.size(); }

    SparseRow row(std::size_t r) const;

    /// Value at (r, c), zero when absent. Binary search within the row.
    double at(std::size_t r, std::size_t c) const;

    std::span<const std::size_t> offsets() const { return offsets_; }
    std::span<const std::uint32_t> indices() const { return indices_; }
    std::span<const double> values() const { return values_; }

    bool operator==(const SparseMatrix&) const = default;

    /// Text form: `rows cols nnz` header, then one `row col value` triple per line.
    void write_text(std::ostream& out) const;
    static SparseMatrix read_text(std::istream& in);

private:
    void validate() const;

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> indices_;
    std::vector<double> values_;
};

double dot(const SparseRow& row, std::span<const double> dense);

}  // namespace e2eg
