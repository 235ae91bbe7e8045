#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dgwc/graph.hpp"
#include "dgwc/kernels.hpp"
#include "dgwc/linalg.hpp"
#include "helpers.hpp"

using namespace dgwc;
using namespace testutil;

TEST_CASE("parallel kernels match serial references bitwise") {
    Rng rng(101);
    for (std::size_t trial = 0; trial < 4; ++trial) {
        const std::size_t n = 17 + 40 * trial;  // crosses the parallel cutoffs
        const std::size_t m = 23 + 30 * trial;
        const DenseMatrix a = random_dense(n, m, rng);
        const DenseMatrix b = random_dense(m, n, rng);
        const DenseMatrix bt = random_dense(n, m, rng);
        const DenseMatrix c = random_dense(n, 5, rng);
        const SparseMatrix s = random_sparse(n, m, 0.15, rng);
        const SparseMatrix s2 = random_sparse(m, n, 0.15, rng);

        CHECK(bitwise_equal(kernels::matmul(a, b), kernels::serial::matmul(a, b)));
        CHECK(bitwise_equal(kernels::matmul_transb(a, bt),
                            kernels::serial::matmul_transb(a, bt)));
        CHECK(bitwise_equal(kernels::matmul_transa(a, c), kernels::serial::matmul_transa(a, c)));
        CHECK(bitwise_equal(kernels::spmm(s, b), kernels::serial::spmm(s, b)));
        CHECK(bitwise_equal(kernels::spgemm(s, s2), kernels::serial::spgemm(s, s2)));

        const DenseMatrix u = random_dense(n, n, rng);
        std::vector<double> w(n);
        for (double& v : w) v = rng.uniform(0.0, 2.0);
        CHECK(bitwise_equal(kernels::sym_scaled_gram(u, w),
                            kernels::serial::sym_scaled_gram(u, w)));
    }
}

TEST_CASE("spmm agrees with the naive dense product") {
    Rng rng(55);
    for (std::size_t trial = 0; trial < 5; ++trial) {
        const SparseMatrix s = random_sparse(20, 20, 0.3, rng);
        const DenseMatrix b = random_dense(20, 20, rng);
        const DenseMatrix via_kernel = kernels::spmm(s, b);
        const DenseMatrix via_dense = naive_matmul(s.to_dense(), b);
        CHECK(max_abs_diff(via_kernel, via_dense) <= 1e-12);
    }
}

TEST_CASE("spgemm agrees with the naive dense product") {
    Rng rng(56);
    const SparseMatrix a = random_sparse(15, 22, 0.25, rng);
    const SparseMatrix b = random_sparse(22, 18, 0.25, rng);
    const SparseMatrix c = kernels::spgemm(a, b);
    c.validate();
    CHECK(max_abs_diff(c.to_dense(), naive_matmul(a.to_dense(), b.to_dense())) <= 1e-12);
}

TEST_CASE("sym_scaled_gram is the scaled gram, bitwise symmetric") {
    Rng rng(57);
    const std::size_t n = 12;
    const DenseMatrix u = random_dense(n, n, rng);
    std::vector<double> w(n);
    for (double& v : w) v = rng.uniform(0.1, 2.0);
    DenseMatrix diag(n, n);
    for (std::size_t i = 0; i < n; ++i) diag(i, i) = w[i];
    const DenseMatrix expected = naive_matmul(naive_matmul(u, diag), u.transposed());
    const DenseMatrix got = kernels::sym_scaled_gram(u, w);
    CHECK(max_abs_diff(got, expected) <= 1e-12);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) CHECK(got(i, j) == got(j, i));
}

#ifdef _OPENMP
TEST_CASE("results are bitwise independent of the thread count") {
    const Graph g = random_graph(150, 0.05, 61);
    const int saved = omp_get_max_threads();
    std::vector<EighResult> eigs;
    std::vector<DenseMatrix> products;
    for (int threads : {1, 2, 4}) {
        omp_set_num_threads(threads);
        const LaplacianBundle bundle = build_laplacian(g);
        eigs.push_back(eigh_sym(bundle.laplacian));
        Rng rng(8);
        products.push_back(
            kernels::spmm(bundle.renorm_propagation, random_dense(150, 16, rng)));
    }
    omp_set_num_threads(saved);
    for (std::size_t k = 1; k < eigs.size(); ++k) {
        CHECK(eigs[k].eigenvalues == eigs[0].eigenvalues);
        CHECK(bitwise_equal(eigs[k].eigenvectors, eigs[0].eigenvectors));
        CHECK(bitwise_equal(products[k], products[0]));
    }
}
#endif

TEST_CASE("kernel shape mismatches throw") {
    const DenseMatrix a(3, 4), b(5, 2);
    CHECK_THROWS_AS(kernels::matmul(a, b), Error);
    CHECK_THROWS_AS(kernels::matmul_transa(a, b), Error);
    CHECK_THROWS_AS(kernels::matmul_transb(a, b), Error);
    const SparseMatrix s(3, 4);
    CHECK_THROWS_AS(kernels::spmm(s, b), Error);
    CHECK_THROWS_AS(kernels::spgemm(s, s), Error);
}
