#include "dgwc/linalg.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>

#include "dgwc/kernels.hpp"
#include "dgwc/rng.hpp"

namespace dgwc {

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b) {
    return kernels::spmm(a, b);
}

namespace {

// Householder reduction to tridiagonal form with accumulation of the
// orthogonal transformation in `a`. On return d holds the diagonal and
// e[1..n-1] the subdiagonal. The reductions (dot products) stay serial;
// only row/column-independent loops are parallel, so the output is bitwise
// independent of thread count.
void tridiagonalize(DenseMatrix& a, std::vector<double>& d, std::vector<double>& e) {
    const std::size_t n = a.rows;
    for (std::size_t i = n - 1; i >= 1; --i) {
        const std::size_t l = i - 1;
        double h = 0.0;
        if (l > 0) {
            double scale = 0.0;
            for (std::size_t k = 0; k <= l; ++k) scale += std::fabs(a(i, k));
            if (scale == 0.0) {
                e[i] = a(i, l);
            } else {
                for (std::size_t k = 0; k <= l; ++k) {
                    a(i, k) /= scale;
                    h += a(i, k) * a(i, k);
                }
                double f = a(i, l);
                const double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                a(i, l) = f - g;
                // p = A u / h, stored in e[0..l]; u / h cached in column i
#pragma omp parallel for schedule(dynamic, 32) if (l > 128)
                for (std::size_t j = 0; j <= l; ++j) {
                    a(j, i) = a(i, j) / h;
                    double s = 0.0;
                    for (std::size_t k = 0; k <= j; ++k) s += a(j, k) * a(i, k);
                    for (std::size_t k = j + 1; k <= l; ++k) s += a(k, j) * a(i, k);
                    e[j] = s / h;
                }
                f = 0.0;
                for (std::size_t j = 0; j <= l; ++j) f += e[j] * a(i, j);
                const double hh = f / (h + h);
                for (std::size_t j = 0; j <= l; ++j) e[j] -= hh * a(i, j);
                // rank-2 update of the lower triangle
#pragma omp parallel for schedule(dynamic, 32) if (l > 128)
                for (std::size_t j = 0; j <= l; ++j) {
                    const double fj = a(i, j);
                    const double gj = e[j];
                    for (std::size_t k = 0; k <= j; ++k)
                        a(j, k) -= fj * e[k] + gj * a(i, k);
                }
            }
        } else {
            e[i] = a(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] != 0.0) {
#pragma omp parallel for schedule(dynamic, 32) if (i > 128)
            for (std::size_t j = 0; j < i; ++j) {
                double g = 0.0;
                for (std::size_t k = 0; k < i; ++k) g += a(i, k) * a(k, j);
                for (std::size_t k = 0; k < i; ++k) a(k, j) -= g * a(k, i);
            }
        }
        d[i] = a(i, i);
        a(i, i) = 1.0;
        for (std::size_t j = 0; j < i; ++j) {
            a(j, i) = 0.0;
            a(i, j) = 0.0;
        }
    }
}

// Implicit-shift QL on the tridiagonal (d, e), rotations accumulated into
// the columns of z.
void ql_implicit_shift(std::vector<double>& d, std::vector<double>& e, DenseMatrix& z) {
    const std::size_t n = d.size();
    if (n <= 1) return;
    constexpr int kMaxIter = 50;
    for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= DBL_EPSILON * dd) break;
            }
            if (m != l) {
                if (iter++ == kMaxIter)
                    fail("eigh_sym: QL iteration budget exhausted; off-diagonal residual ",
                         std::fabs(e[l]));
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflow = false;
                for (std::size_t i = m; i-- > l;) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
#pragma omp parallel for schedule(static) if (n >= 256)
                    for (std::size_t k = 0; k < n; ++k) {
                        f = z(k, i + 1);
                        z(k, i + 1) = s * z(k, i) + c * f;
                        z(k, i) = c * z(k, i) - s * f;
                    }
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

}  // namespace

EighResult eigh_sym(const DenseMatrix& m) {
    require(m.rows == m.cols, "eigh_sym: matrix is ", m.rows, "x", m.cols, ", not square");
    require(m.rows > 0, "eigh_sym: empty matrix");
    require(m.all_finite(), "eigh_sym: input has non-finite entries");
    double asym = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = i + 1; j < m.cols; ++j)
            asym = std::max(asym, std::fabs(m(i, j) - m(j, i)));
    require(asym <= 1e-10, "eigh_sym: input asymmetric, max |m_ij - m_ji| = ", asym);

    const std::size_t n = m.rows;
    EighResult res;
    res.eigenvectors = m;
    res.eigenvalues.assign(n, 0.0);
    std::vector<double> e(n, 0.0);
    if (n == 1) {
        res.eigenvalues[0] = m(0, 0);
        res.eigenvectors(0, 0) = 1.0;
        return res;
    }
    tridiagonalize(res.eigenvectors, res.eigenvalues, e);
    ql_implicit_shift(res.eigenvalues, e, res.eigenvectors);

    // ascending order, columns permuted along
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return res.eigenvalues[a] < res.eigenvalues[b];
    });
    EighResult sorted;
    sorted.eigenvalues.resize(n);
    sorted.eigenvectors = DenseMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        sorted.eigenvalues[j] = res.eigenvalues[order[j]];
        for (std::size_t i = 0; i < n; ++i)
            sorted.eigenvectors(i, j) = res.eigenvectors(i, order[j]);
    }
    return sorted;
}

SparseMatrix threshold_sparsify(const DenseMatrix& m, double t) {
    require(std::isfinite(t), "threshold_sparsify: threshold not finite");
    require(t >= 0.0, "threshold_sparsify: negative threshold ", t);
    SparseMatrix s(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) {
            const double v = row[j];
            if (v != 0.0 && std::fabs(v) >= t) {
                s.col_indices.push_back(static_cast<std::uint32_t>(j));
                s.values.push_back(v);
            }
        }
        s.row_offsets[i + 1] = s.values.size();
    }
    return s;
}

double density(const SparseMatrix& m) {
    if (m.rows == 0 || m.cols == 0) return 0.0;
    return static_cast<double>(m.nnz()) /
           (static_cast<double>(m.rows) * static_cast<double>(m.cols));
}

double frobenius_rel_error(const DenseMatrix& a, const DenseMatrix& b) {
    require(a.same_shape(b), "frobenius_rel_error: shape mismatch: ", a.rows, "x", a.cols,
            " vs ", b.rows, "x", b.cols);
    double num = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        num += d * d;
    }
    return std::sqrt(num) / std::max(b.frobenius_norm(), DBL_EPSILON);
}

double estimate_spectral_bound(const SparseMatrix& m, std::size_t iterations) {
    require(m.rows == m.cols, "estimate_spectral_bound: matrix is ", m.rows, "x", m.cols);
    DenseMatrix x(m.rows, 1);
    Rng rng(0x5bd1e995u);
    for (double& v : x.values) v = rng.uniform(-1.0, 1.0);
    double norm = x.frobenius_norm();
    double lambda = 0.0;
    for (std::size_t it = 0; it < iterations; ++it) {
        for (double& v : x.values) v /= norm;
        DenseMatrix y = kernels::spmm(m, x);
        lambda = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) lambda += x.values[i] * y.values[i];
        norm = y.frobenius_norm();
        if (norm == 0.0) return 0.0;
        x = y;
    }
    return std::fabs(lambda);
}

}  // namespace dgwc
