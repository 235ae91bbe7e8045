#include "dgwc/kernels.hpp"

#include <algorithm>
#include <cstdint>

namespace dgwc::kernels {

namespace {

void check_matmul(const DenseMatrix& a, const DenseMatrix& b, std::size_t a_inner,
                  std::size_t b_inner, const char* what) {
    require(a_inner == b_inner, what, ": dimension mismatch: a is ", a.rows, "x", a.cols,
            ", b is ", b.rows, "x", b.cols);
}

inline void matmul_row(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c,
                       std::size_t i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
        const double aik = arow[k];
        if (aik == 0.0) continue;
        const double* brow = b.row(k);
        for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
}

inline void matmul_transb_row(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c,
                              std::size_t i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
        const double* brow = b.row(j);
        double s = 0.0;
        for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
        crow[j] = s;
    }
}

inline void matmul_transa_row(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c,
                              std::size_t k) {
    double* crow = c.row(k);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        const double* brow = b.row(i);
        for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
}

inline void spmm_row(const SparseMatrix& s, const DenseMatrix& b, DenseMatrix& c,
                     std::size_t i) {
    double* crow = c.row(i);
    for (std::size_t e = s.row_offsets[i]; e < s.row_offsets[i + 1]; ++e) {
        const double v = s.values[e];
        const double* brow = b.row(s.col_indices[e]);
        for (std::size_t j = 0; j < b.cols; ++j) crow[j] += v * brow[j];
    }
}

inline void gram_row(const DenseMatrix& u, const std::vector<double>& w, DenseMatrix& out,
                     std::size_t i) {
    const std::size_t n = u.rows;
    const double* ui = u.row(i);
    for (std::size_t j = i; j < n; ++j) {
        const double* uj = u.row(j);
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += ui[k] * w[k] * uj[k];
        out(i, j) = s;
    }
}

// Per-row Gustavson step: accumulate a.row(i) * b into a dense scratch,
// then emit columns in ascending order. The accumulation order depends only
// on the row structure, never on thread count.
inline void spgemm_row(const SparseMatrix& a, const SparseMatrix& b, std::size_t i,
                       std::vector<double>& accum, std::vector<char>& seen,
                       std::vector<std::uint32_t>& touched,
                       std::vector<std::uint32_t>& out_cols, std::vector<double>& out_vals) {
    touched.clear();
    for (std::size_t ea = a.row_offsets[i]; ea < a.row_offsets[i + 1]; ++ea) {
        const double av = a.values[ea];
        const std::uint32_t k = a.col_indices[ea];
        for (std::size_t eb = b.row_offsets[k]; eb < b.row_offsets[k + 1]; ++eb) {
            const std::uint32_t j = b.col_indices[eb];
            if (!seen[j]) {
                seen[j] = 1;
                touched.push_back(j);
            }
            accum[j] += av * b.values[eb];
        }
    }
    std::sort(touched.begin(), touched.end());
    out_cols.clear();
    out_vals.clear();
    for (std::uint32_t j : touched) {
        if (accum[j] != 0.0) {
            out_cols.push_back(j);
            out_vals.push_back(accum[j]);
        }
        accum[j] = 0.0;
        seen[j] = 0;
    }
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    check_matmul(a, b, a.cols, b.rows, "matmul");
    DenseMatrix c(a.rows, b.cols);
#pragma omp parallel for schedule(static) if (a.rows > 32)
    for (std::size_t i = 0; i < a.rows; ++i) matmul_row(a, b, c, i);
    return c;
}

DenseMatrix matmul_transb(const DenseMatrix& a, const DenseMatrix& b) {
    check_matmul(a, b, a.cols, b.cols, "matmul_transb");
    DenseMatrix c(a.rows, b.rows);
#pragma omp parallel for schedule(static) if (a.rows > 32)
    for (std::size_t i = 0; i < a.rows; ++i) matmul_transb_row(a, b, c, i);
    return c;
}

DenseMatrix matmul_transa(const DenseMatrix& a, const DenseMatrix& b) {
    check_matmul(a, b, a.rows, b.rows, "matmul_transa");
    DenseMatrix c(a.cols, b.cols);
#pragma omp parallel for schedule(static) if (a.cols > 32)
    for (std::size_t k = 0; k < a.cols; ++k) matmul_transa_row(a, b, c, k);
    return c;
}

DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& b) {
    require(s.cols == b.rows, "spmm: dimension mismatch: a is ", s.rows, "x", s.cols,
            ", b is ", b.rows, "x", b.cols);
    DenseMatrix c(s.rows, b.cols);
#pragma omp parallel for schedule(static) if (s.rows > 64)
    for (std::size_t i = 0; i < s.rows; ++i) spmm_row(s, b, c, i);
    return c;
}

SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b) {
    require(a.cols == b.rows, "spgemm: dimension mismatch: a is ", a.rows, "x", a.cols,
            ", b is ", b.rows, "x", b.cols);
    SparseMatrix c(a.rows, b.cols);
    std::vector<std::vector<std::uint32_t>> row_cols(a.rows);
    std::vector<std::vector<double>> row_vals(a.rows);
#pragma omp parallel if (a.rows > 64)
    {
        std::vector<double> accum(b.cols, 0.0);
        std::vector<char> seen(b.cols, 0);
        std::vector<std::uint32_t> touched;
#pragma omp for schedule(dynamic, 64)
        for (std::size_t i = 0; i < a.rows; ++i)
            spgemm_row(a, b, i, accum, seen, touched, row_cols[i], row_vals[i]);
    }
    for (std::size_t i = 0; i < a.rows; ++i)
        c.row_offsets[i + 1] = c.row_offsets[i] + row_cols[i].size();
    c.col_indices.resize(c.row_offsets[a.rows]);
    c.values.resize(c.row_offsets[a.rows]);
#pragma omp parallel for schedule(static) if (a.rows > 64)
    for (std::size_t i = 0; i < a.rows; ++i) {
        std::copy(row_cols[i].begin(), row_cols[i].end(),
                  c.col_indices.begin() + static_cast<std::ptrdiff_t>(c.row_offsets[i]));
        std::copy(row_vals[i].begin(), row_vals[i].end(),
                  c.values.begin() + static_cast<std::ptrdiff_t>(c.row_offsets[i]));
    }
    return c;
}

DenseMatrix sym_scaled_gram(const DenseMatrix& u, const std::vector<double>& w) {
    require(u.rows == u.cols && u.rows == w.size(), "sym_scaled_gram: u is ", u.rows, "x",
            u.cols, ", w has length ", w.size());
    const std::size_t n = u.rows;
    DenseMatrix out(n, n);
#pragma omp parallel for schedule(dynamic, 16) if (n > 64)
    for (std::size_t i = 0; i < n; ++i) gram_row(u, w, out, i);
    // mirror the strict upper triangle
#pragma omp parallel for schedule(static) if (n > 64)
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
    return out;
}

namespace serial {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    check_matmul(a, b, a.cols, b.rows, "matmul");
    DenseMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) matmul_row(a, b, c, i);
    return c;
}

DenseMatrix matmul_transb(const DenseMatrix& a, const DenseMatrix& b) {
    check_matmul(a, b, a.cols, b.cols, "matmul_transb");
    DenseMatrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) matmul_transb_row(a, b, c, i);
    return c;
}

DenseMatrix matmul_transa(const DenseMatrix& a, const DenseMatrix& b) {
    check_matmul(a, b, a.rows, b.rows, "matmul_transa");
    DenseMatrix c(a.cols, b.cols);
    for (std::size_t k = 0; k < a.cols; ++k) matmul_transa_row(a, b, c, k);
    return c;
}

DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& b) {
    require(s.cols == b.rows, "spmm: dimension mismatch: a is ", s.rows, "x", s.cols,
            ", b is ", b.rows, "x", b.cols);
    DenseMatrix c(s.rows, b.cols);
    for (std::size_t i = 0; i < s.rows; ++i) spmm_row(s, b, c, i);
    return c;
}

SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b) {
    require(a.cols == b.rows, "spgemm: dimension mismatch: a is ", a.rows, "x", a.cols,
            ", b is ", b.rows, "x", b.cols);
    SparseMatrix c(a.rows, b.cols);
    std::vector<double> accum(b.cols, 0.0);
    std::vector<char> seen(b.cols, 0);
    std::vector<std::uint32_t> touched, cols;
    std::vector<double> vals;
    for (std::size_t i = 0; i < a.rows; ++i) {
        spgemm_row(a, b, i, accum, seen, touched, cols, vals);
        c.col_indices.insert(c.col_indices.end(), cols.begin(), cols.end());
        c.values.insert(c.values.end(), vals.begin(), vals.end());
        c.row_offsets[i + 1] = c.col_indices.size();
    }
    return c;
}

DenseMatrix sym_scaled_gram(const DenseMatrix& u, const std::vector<double>& w) {
    require(u.rows == u.cols && u.rows == w.size(), "sym_scaled_gram: u is ", u.rows, "x",
            u.cols, ", w has length ", w.size());
    const std::size_t n = u.rows;
    DenseMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) gram_row(u, w, out, i);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) out(i, j) = out(j, i);
    return out;
}

}  // namespace serial

}  // namespace dgwc::kernels
