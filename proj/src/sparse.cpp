#include "dgwc/sparse.hpp"

#include <algorithm>

namespace dgwc {

void SparseMatrix::validate() const {
    require(row_offsets.size() == rows + 1, "SparseMatrix: row_offsets length ",
            row_offsets.size(), " != rows+1 = ", rows + 1);
    require(row_offsets.front() == 0, "SparseMatrix: row_offsets[0] != 0");
    require(row_offsets.back() == values.size(), "SparseMatrix: row_offsets back ",
            row_offsets.back(), " != nnz ", values.size());
    require(col_indices.size() == values.size(), "SparseMatrix: col/value length mismatch");
    for (std::size_t i = 0; i < rows; ++i) {
        require(row_offsets[i] <= row_offsets[i + 1], "SparseMatrix: row_offsets not monotone at row ", i);
        for (std::size_t e = row_offsets[i]; e < row_offsets[i + 1]; ++e) {
            require(col_indices[e] < cols, "SparseMatrix: column ", col_indices[e],
                    " out of range at row ", i);
            if (e > row_offsets[i])
                require(col_indices[e - 1] < col_indices[e],
                        "SparseMatrix: columns not strictly increasing in row ", i);
        }
    }
}

DenseMatrix SparseMatrix::to_dense() const {
    DenseMatrix d(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t e = row_offsets[i]; e < row_offsets[i + 1]; ++e)
            d(i, col_indices[e]) = values[e];
    return d;
}

SparseMatrix SparseMatrix::transposed() const {
    SparseMatrix t(cols, rows);
    std::vector<std::size_t> counts(cols, 0);
    for (std::uint32_t j : col_indices) ++counts[j];
    for (std::size_t j = 0; j < cols; ++j) t.row_offsets[j + 1] = t.row_offsets[j] + counts[j];
    t.col_indices.resize(nnz());
    t.values.resize(nnz());
    std::vector<std::size_t> cursor(t.row_offsets.begin(), t.row_offsets.end() - 1);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t e = row_offsets[i]; e < row_offsets[i + 1]; ++e) {
            const std::uint32_t j = col_indices[e];
            t.col_indices[cursor[j]] = static_cast<std::uint32_t>(i);
            t.values[cursor[j]] = values[e];
            ++cursor[j];
        }
    return t;
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
    const auto begin = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[i]);
    const auto end = col_indices.begin() + static_cast<std::ptrdiff_t>(row_offsets[i + 1]);
    const auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(j));
    if (it == end || *it != j) return 0.0;
    return values[static_cast<std::size_t>(it - col_indices.begin())];
}

SparseMatrix CooBuilder::build() {
    std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix m(rows_, cols_);
    m.col_indices.reserve(entries_.size());
    m.values.reserve(entries_.size());
    for (std::size_t e = 0; e < entries_.size(); ++e) {
        const Entry& en = entries_[e];
        require(en.row < rows_ && en.col < cols_, "CooBuilder: entry (", en.row, ",", en.col,
                ") outside ", rows_, "x", cols_);
        if (e > 0)
            require(entries_[e - 1].row != en.row || entries_[e - 1].col != en.col,
                    "CooBuilder: duplicate entry at (", en.row, ",", en.col, ")");
        m.col_indices.push_back(en.col);
        m.values.push_back(en.value);
        m.row_offsets[en.row + 1] = m.col_indices.size();
    }
    for (std::size_t i = 0; i < rows_; ++i)
        m.row_offsets[i + 1] = std::max(m.row_offsets[i + 1], m.row_offsets[i]);
    return m;
}

SparseMatrix add_scaled(double alpha, const SparseMatrix& a, double beta, const SparseMatrix& b) {
    require(a.rows == b.rows && a.cols == b.cols, "add_scaled: shape mismatch: ", a.rows, "x",
            a.cols, " vs ", b.rows, "x", b.cols);
    SparseMatrix c(a.rows, a.cols);
    c.col_indices.reserve(std::max(a.nnz(), b.nnz()));
    c.values.reserve(std::max(a.nnz(), b.nnz()));
    for (std::size_t i = 0; i < a.rows; ++i) {
        std::size_t ea = a.row_offsets[i], eb = b.row_offsets[i];
        const std::size_t enda = a.row_offsets[i + 1], endb = b.row_offsets[i + 1];
        while (ea < enda || eb < endb) {
            std::uint32_t col;
            double v;
            if (eb >= endb || (ea < enda && a.col_indices[ea] < b.col_indices[eb])) {
                col = a.col_indices[ea];
                v = alpha * a.values[ea];
                ++ea;
            } else if (ea >= enda || b.col_indices[eb] < a.col_indices[ea]) {
                col = b.col_indices[eb];
                v = beta * b.values[eb];
                ++eb;
            } else {
                col = a.col_indices[ea];
                v = alpha * a.values[ea] + beta * b.values[eb];
                ++ea;
                ++eb;
            }
            if (v != 0.0) {
                c.col_indices.push_back(col);
                c.values.push_back(v);
            }
        }
        c.row_offsets[i + 1] = c.col_indices.size();
    }
    return c;
}

SparseMatrix scaled(const SparseMatrix& a, double s) {
    SparseMatrix c = a;
    for (double& v : c.values) v *= s;
    return c;
}

SparseMatrix symmetrized(const SparseMatrix& a) {
    require(a.rows == a.cols, "symmetrized: matrix is ", a.rows, "x", a.cols);
    return add_scaled(0.5, a, 0.5, a.transposed());
}

}  // namespace dgwc
