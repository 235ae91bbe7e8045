#include "dgwc/wavelet.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "dgwc/kernels.hpp"
#include "dgwc/linalg.hpp"
#include "dgwc/rng.hpp"

namespace dgwc {

namespace {

constexpr std::size_t kExactLimit = 8192;  // dense eigendecomposition ceiling
constexpr std::size_t kChebyBlock = 512;    // streaming column-block width

void check_params(double s, double t) {
    require(std::isfinite(s) && s > 0.0, "wavelet: scale must be positive, got ", s);
    require(std::isfinite(t) && t >= 0.0, "wavelet: threshold must be >= 0, got ", t);
}

// L - I (the [0,2] -> [-1,1] spectral map); inserts the diagonal where L
// stores none (isolated nodes).
SparseMatrix shifted_laplacian(const SparseMatrix& lap) {
    SparseMatrix m(lap.rows, lap.cols);
    for (std::size_t i = 0; i < lap.rows; ++i) {
        bool diag_done = false;
        for (std::size_t e = lap.row_offsets[i]; e < lap.row_offsets[i + 1]; ++e) {
            const std::uint32_t j = lap.col_indices[e];
            if (j == i) {
                m.col_indices.push_back(j);
                m.values.push_back(lap.values[e] - 1.0);
                diag_done = true;
            } else {
                if (!diag_done && j > i) {
                    m.col_indices.push_back(static_cast<std::uint32_t>(i));
                    m.values.push_back(-1.0);
                    diag_done = true;
                }
                m.col_indices.push_back(j);
                m.values.push_back(lap.values[e]);
            }
        }
        if (!diag_done) {
            m.col_indices.push_back(static_cast<std::uint32_t>(i));
            m.values.push_back(-1.0);
        }
        m.row_offsets[i + 1] = m.values.size();
    }
    return m;
}

}  // namespace

std::vector<double> chebyshev_heat_coefficients(double s, int order) {
    require(order >= 1, "chebyshev coefficients: order must be >= 1, got ", order);
    // cosine quadrature at the order+1 Chebyshev extrema cos(pi j / order);
    // the nodes include both spectrum endpoints, so the interpolant is exact
    // at lambda = 0 and lambda = 2
    const int n = order;
    std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
    for (int k = 0; k <= n; ++k) {
        double acc = 0.0;
        for (int j = 0; j <= n; ++j) {
            const double theta = M_PI * j / n;
            const double weight = (j == 0 || j == n) ? 0.5 : 1.0;
            acc += weight * std::exp(-s * (std::cos(theta) + 1.0)) * std::cos(k * theta);
        }
        c[static_cast<std::size_t>(k)] = 2.0 * acc / n;
    }
    c[0] *= 0.5;
    c[static_cast<std::size_t>(n)] *= 0.5;
    return c;
}

WaveletBasis wavelet_exact(const LaplacianBundle& bundle, double s, double t) {
    check_params(s, t);
    const std::size_t n = bundle.laplacian_sparse.rows;
    require(n <= kExactLimit, "wavelet_exact: n = ", n, " exceeds dense limit ", kExactLimit,
            "; use the chebyshev path");
    const DenseMatrix lap = dense_laplacian(bundle);
    const EighResult eig = eigh_sym(lap);

    std::vector<double> heat(n), heat_inv(n);
    for (std::size_t k = 0; k < n; ++k) {
        heat[k] = std::exp(-s * eig.eigenvalues[k]);
        heat_inv[k] = std::exp(s * eig.eigenvalues[k]);
    }

    WaveletBasis basis;
    basis.scale = s;
    basis.threshold = t;
    basis.method = WaveletMethod::exact;
    basis.lambda_min = eig.eigenvalues.front();
    basis.lambda_max = eig.eigenvalues.back();
    basis.psi = threshold_sparsify(kernels::sym_scaled_gram(eig.eigenvectors, heat), t);
    basis.psi_inverse =
        threshold_sparsify(kernels::sym_scaled_gram(eig.eigenvectors, heat_inv), t);
    basis.density_psi = density(basis.psi);
    basis.density_psi_inverse = density(basis.psi_inverse);
    return basis;
}

WaveletBasis wavelet_chebyshev(const LaplacianBundle& bundle, double s, double t, int order,
                               std::size_t dense_limit) {
    check_params(s, t);
    require(order >= 1, "wavelet_chebyshev: order must be >= 1, got ", order);
    const std::size_t n = bundle.laplacian_sparse.rows;
    const SparseMatrix shifted = shifted_laplacian(bundle.laplacian_sparse);
    const std::vector<double> cm = chebyshev_heat_coefficients(s, order);
    const std::vector<double> cp = chebyshev_heat_coefficients(-s, order);

    WaveletBasis basis;
    basis.scale = s;
    basis.threshold = t;
    basis.method = WaveletMethod::chebyshev;
    basis.chebyshev_order = order;

    // Runs the T_k recurrence on one column block, accumulating both kernels.
    auto run_block = [&](std::size_t c0, std::size_t c1, DenseMatrix& acc_m,
                         DenseMatrix& acc_p) {
        const std::size_t b = c1 - c0;
        DenseMatrix t_prev(n, b);
        for (std::size_t j = 0; j < b; ++j) t_prev(c0 + j, j) = 1.0;
        DenseMatrix t_cur = kernels::spmm(shifted, t_prev);
        acc_m = DenseMatrix(n, b);
        acc_p = DenseMatrix(n, b);
#pragma omp parallel for schedule(static) if (n > 64)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < b; ++j) {
                acc_m(i, j) = cm[0] * t_prev(i, j) + cm[1] * t_cur(i, j);
                acc_p(i, j) = cp[0] * t_prev(i, j) + cp[1] * t_cur(i, j);
            }
        for (int k = 2; k <= order; ++k) {
            DenseMatrix t_next = kernels::spmm(shifted, t_cur);
#pragma omp parallel for schedule(static) if (n > 64)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < b; ++j) {
                    t_next(i, j) = 2.0 * t_next(i, j) - t_prev(i, j);
                    acc_m(i, j) += cm[static_cast<std::size_t>(k)] * t_next(i, j);
                    acc_p(i, j) += cp[static_cast<std::size_t>(k)] * t_next(i, j);
                }
            t_prev = std::move(t_cur);
            t_cur = std::move(t_next);
        }
    };

    if (n <= dense_limit) {
        DenseMatrix full_m(n, n), full_p(n, n);
        for (std::size_t c0 = 0; c0 < n; c0 += kChebyBlock) {
            const std::size_t c1 = std::min(n, c0 + kChebyBlock);
            DenseMatrix acc_m, acc_p;
            run_block(c0, c1, acc_m, acc_p);
#pragma omp parallel for schedule(static) if (n > 64)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = c0; j < c1; ++j) {
                    full_m(i, j) = acc_m(i, j - c0);
                    full_p(i, j) = acc_p(i, j - c0);
                }
        }
        // enforce exact symmetry before sparsifying
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                full_m(i, j) = full_m(j, i) = 0.5 * (full_m(i, j) + full_m(j, i));
                full_p(i, j) = full_p(j, i) = 0.5 * (full_p(i, j) + full_p(j, i));
            }
        basis.psi = threshold_sparsify(full_m, t);
        basis.psi_inverse = threshold_sparsify(full_p, t);
    } else {
        // streaming: sparsify each column block, assemble from triplets
        CooBuilder coo_m(n, n), coo_p(n, n);
        for (std::size_t c0 = 0; c0 < n; c0 += kChebyBlock) {
            const std::size_t c1 = std::min(n, c0 + kChebyBlock);
            DenseMatrix acc_m, acc_p;
            run_block(c0, c1, acc_m, acc_p);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = c0; j < c1; ++j) {
                    const double vm = acc_m(i, j - c0);
                    if (vm != 0.0 && std::fabs(vm) >= t) coo_m.add(i, j, vm);
                    const double vp = acc_p(i, j - c0);
                    if (vp != 0.0 && std::fabs(vp) >= t) coo_p.add(i, j, vp);
                }
        }
        basis.psi = coo_m.build();
        basis.psi_inverse = coo_p.build();
    }
    basis.density_psi = density(basis.psi);
    basis.density_psi_inverse = density(basis.psi_inverse);
    return basis;
}

BasisStats basis_stats(const WaveletBasis& basis) {
    BasisStats stats;
    stats.density_psi = basis.density_psi;
    stats.density_psi_inverse = basis.density_psi_inverse;
    const SparseMatrix prod = kernels::spgemm(basis.psi, basis.psi_inverse);
    double residual = 0.0;
    for (std::size_t i = 0; i < prod.rows; ++i) {
        bool diag_seen = false;
        for (std::size_t e = prod.row_offsets[i]; e < prod.row_offsets[i + 1]; ++e) {
            const double expected = prod.col_indices[e] == i ? 1.0 : 0.0;
            if (prod.col_indices[e] == i) diag_seen = true;
            residual = std::max(residual, std::fabs(prod.values[e] - expected));
        }
        if (!diag_seen) residual = std::max(residual, 1.0);
    }
    stats.max_offdiag_residual = residual;
    return stats;
}

namespace {

constexpr char kMagic[8] = {'D', 'G', 'W', 'C', 'W', 'A', 'V', '1'};
static_assert(std::endian::native == std::endian::little,
              "wavelet cache assumes a little-endian host");

void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_f64(std::ofstream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
bool read_u64(std::ifstream& in, std::uint64_t& v) {
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(v)));
}
bool read_f64(std::ifstream& in, double& v) {
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(v)));
}

void write_csr(std::ofstream& out, const SparseMatrix& m) {
    write_u64(out, m.rows);
    write_u64(out, m.cols);
    write_u64(out, m.nnz());
    for (std::size_t v : m.row_offsets) write_u64(out, v);
    for (std::uint32_t v : m.col_indices) write_u64(out, v);
    for (double v : m.values) write_f64(out, v);
}

bool read_csr(std::ifstream& in, SparseMatrix& m) {
    std::uint64_t rows = 0, cols = 0, nnz = 0;
    if (!read_u64(in, rows) || !read_u64(in, cols) || !read_u64(in, nnz)) return false;
    m = SparseMatrix(rows, cols);
    m.row_offsets.resize(rows + 1);
    m.col_indices.resize(nnz);
    m.values.resize(nnz);
    for (auto& v : m.row_offsets) {
        std::uint64_t x;
        if (!read_u64(in, x)) return false;
        v = x;
    }
    for (auto& v : m.col_indices) {
        std::uint64_t x;
        if (!read_u64(in, x)) return false;
        v = static_cast<std::uint32_t>(x);
    }
    for (auto& v : m.values)
        if (!read_f64(in, v)) return false;
    return true;
}

}  // namespace

void save_wavelet_basis(const WaveletBasis& basis, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "save_wavelet_basis: cannot open ", path);
    out.write(kMagic, sizeof(kMagic));
    write_f64(out, basis.scale);
    write_f64(out, basis.threshold);
    write_u64(out, basis.method == WaveletMethod::exact ? 0 : 1);
    write_u64(out, static_cast<std::uint64_t>(basis.chebyshev_order));
    write_f64(out, basis.lambda_min);
    write_f64(out, basis.lambda_max);
    write_csr(out, basis.psi);
    write_csr(out, basis.psi_inverse);
    require(out.good(), "save_wavelet_basis: write failed for ", path);
}

std::optional<WaveletBasis> load_wavelet_basis(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) return std::nullopt;
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        return std::nullopt;
    WaveletBasis basis;
    std::uint64_t method = 0, order = 0;
    if (!read_f64(in, basis.scale) || !read_f64(in, basis.threshold) ||
        !read_u64(in, method) || !read_u64(in, order) || !read_f64(in, basis.lambda_min) ||
        !read_f64(in, basis.lambda_max))
        return std::nullopt;
    basis.method = method == 0 ? WaveletMethod::exact : WaveletMethod::chebyshev;
    basis.chebyshev_order = static_cast<int>(order);
    if (!read_csr(in, basis.psi) || !read_csr(in, basis.psi_inverse)) return std::nullopt;
    basis.density_psi = density(basis.psi);
    basis.density_psi_inverse = density(basis.psi_inverse);
    return basis;
}

std::string wavelet_cache_name(const std::string& dataset_id, double s, double t,
                               WaveletMethod method, int order) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s|s=%.17g|t=%.17g|m=%d|o=%d", dataset_id.c_str(), s, t,
                  method == WaveletMethod::exact ? 0 : 1,
                  method == WaveletMethod::chebyshev ? order : 0);
    const std::uint64_t h = fnv1a(buf, std::strlen(buf));
    char name[64];
    std::snprintf(name, sizeof(name), "wavelet_%016llx.bin",
                  static_cast<unsigned long long>(h));
    return name;
}

}  // namespace dgwc
