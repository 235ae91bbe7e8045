#pragma once

#include <cstdint>
#include <vector>

#include "dgwc/dense.hpp"
#include "dgwc/graph.hpp"
#include "dgwc/rng.hpp"
#include "dgwc/sparse.hpp"

namespace testutil {

inline dgwc::DenseMatrix random_dense(std::size_t rows, std::size_t cols, dgwc::Rng& rng,
                                      double lo = -1.0, double hi = 1.0) {
    dgwc::DenseMatrix m(rows, cols);
    for (double& v : m.values) v = rng.uniform(lo, hi);
    return m;
}

// dense with a seeded zero pattern, for sparsity round-trips
inline dgwc::DenseMatrix random_dense_sparse(std::size_t rows, std::size_t cols,
                                             double fill, dgwc::Rng& rng) {
    dgwc::DenseMatrix m(rows, cols);
    for (double& v : m.values)
        if (rng.next_unit() < fill) v = rng.uniform(-1.0, 1.0);
    return m;
}

inline dgwc::SparseMatrix random_sparse(std::size_t rows, std::size_t cols, double fill,
                                        dgwc::Rng& rng) {
    const dgwc::DenseMatrix d = random_dense_sparse(rows, cols, fill, rng);
    dgwc::SparseMatrix s(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j)
            if (d(i, j) != 0.0) {
                s.col_indices.push_back(static_cast<std::uint32_t>(j));
                s.values.push_back(d(i, j));
            }
        s.row_offsets[i + 1] = s.values.size();
    }
    return s;
}

// Erdos-Renyi-style graph with random features and labels.
inline dgwc::Graph random_graph(std::size_t n, double edge_prob, std::uint64_t seed,
                                std::size_t feature_dim = 4, std::size_t classes = 2) {
    dgwc::Rng rng(seed);
    dgwc::Graph g;
    g.n = n;
    g.num_classes = classes;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = i + 1; j < n; ++j)
            if (rng.next_unit() < edge_prob) g.edges.push_back({i, j});
    g.features = random_dense(n, feature_dim, rng, 0.0, 1.0);
    g.labels.resize(n);
    for (auto& l : g.labels) l = static_cast<int>(rng.next_below(classes));
    return g;
}

// independent reference product, written without the kernel code paths
inline dgwc::DenseMatrix naive_matmul(const dgwc::DenseMatrix& a, const dgwc::DenseMatrix& b) {
    dgwc::DenseMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline bool bitwise_equal(const dgwc::DenseMatrix& a, const dgwc::DenseMatrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.values == b.values;
}

inline bool bitwise_equal(const dgwc::SparseMatrix& a, const dgwc::SparseMatrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.row_offsets == b.row_offsets &&
           a.col_indices == b.col_indices && a.values == b.values;
}

}  // namespace testutil
