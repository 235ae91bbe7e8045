#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dgwc/dense.hpp"
#include "dgwc/error.hpp"

namespace dgwc {

// Compressed sparse row matrix. col_indices are strictly increasing within
// each row; no explicitly stored zeros after a thresholding construction.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_offsets;     // rows+1, non-decreasing
    std::vector<std::uint32_t> col_indices;   // nnz
    std::vector<double> values;               // nnz

    SparseMatrix() = default;
    SparseMatrix(std::size_t r, std::size_t c)
        : rows(r), cols(c), row_offsets(r + 1, 0) {}

    static SparseMatrix identity(std::size_t n) {
        SparseMatrix m(n, n);
        m.col_indices.resize(n);
        m.values.assign(n, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            m.col_indices[i] = static_cast<std::uint32_t>(i);
            m.row_offsets[i + 1] = i + 1;
        }
        return m;
    }

    std::size_t nnz() const { return values.size(); }

    // Checks the CSR structural invariants; throws on violation.
    void validate() const;

    DenseMatrix to_dense() const;
    SparseMatrix transposed() const;

    // Stored value at (i,j), 0 when absent. Binary search within the row.
    double at(std::size_t i, std::size_t j) const;
};

// Triplet accumulator for construction from unordered entries. Entries must
// be unique; build() sorts and fails on duplicates.
class CooBuilder {
public:
    CooBuilder(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}
    void add(std::size_t i, std::size_t j, double v) {
        entries_.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), v});
    }
    std::size_t size() const { return entries_.size(); }
    SparseMatrix build();

private:
    struct Entry {
        std::uint32_t row, col;
        double value;
    };
    std::size_t rows_, cols_;
    std::vector<Entry> entries_;
};

// c = alpha*a + beta*b on the union pattern; entries whose computed value is
// exactly zero are dropped.
SparseMatrix add_scaled(double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b);

// Values multiplied by s in place (structure untouched).
SparseMatrix scaled(const SparseMatrix& a, double s);

// (a + a^T) / 2 with exact-zero results dropped.
SparseMatrix symmetrized(const SparseMatrix& a);

}  // namespace dgwc
