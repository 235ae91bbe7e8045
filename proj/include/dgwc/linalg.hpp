#pragma once

#include <vector>

#include "dgwc/dense.hpp"
#include "dgwc/sparse.hpp"

namespace dgwc {

// Sparse-dense product with shape checking.
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b);

struct EighResult {
    std::vector<double> eigenvalues;  // ascending
    DenseMatrix eigenvectors;         // column j pairs with eigenvalues[j]
};

// Symmetric eigendecomposition: Householder tridiagonalization followed by
// implicit-shift QL. Input must be square and symmetric to 1e-10.
EighResult eigh_sym(const DenseMatrix& m);

// Keeps entries with |value| >= t (and drops exact zeros); stored values are
// the source values, untouched.
SparseMatrix threshold_sparsify(const DenseMatrix& m, double t);

// stored-entry count / (rows * cols)
double density(const SparseMatrix& m);

// ||a - b||_F / max(||b||_F, eps)
double frobenius_rel_error(const DenseMatrix& a, const DenseMatrix& b);

// Power-iteration estimate of the largest eigenvalue magnitude of a
// symmetric sparse operator.
double estimate_spectral_bound(const SparseMatrix& m, std::size_t iterations = 50);

}  // namespace dgwc
