#pragma once

#include <cstddef>

#include "dgwc/dense.hpp"
#include "dgwc/sparse.hpp"

// Hot numeric kernels. Each has an OpenMP row-parallel variant (the default)
// and a serial reference in kernels::serial used by tests and the benchmark.
// Every parallel loop assigns whole output rows to a single thread with the
// same per-row instruction order as the serial code, so results are bitwise
// identical for any thread count.

namespace dgwc::kernels {

// c = a * b
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// c = a * b^T
DenseMatrix matmul_transb(const DenseMatrix& a, const DenseMatrix& b);
// c = a^T * b
DenseMatrix matmul_transa(const DenseMatrix& a, const DenseMatrix& b);
// c = s * b  (CSR times dense block)
DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& b);
// c = a * b  (CSR times CSR, Gustavson)
SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b);
// out = u * diag(w) * u^T, computed on the upper triangle and mirrored, so
// the result is bitwise symmetric. u is n x n row-major, w has length n.
DenseMatrix sym_scaled_gram(const DenseMatrix& u, const std::vector<double>& w);

namespace serial {
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_transb(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_transa(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& b);
SparseMatrix spgemm(const SparseMatrix& a, const SparseMatrix& b);
DenseMatrix sym_scaled_gram(const DenseMatrix& u, const std::vector<double>& w);
}  // namespace serial

}  // namespace dgwc::kernels
