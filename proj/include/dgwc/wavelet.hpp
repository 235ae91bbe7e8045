#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dgwc/graph.hpp"
#include "dgwc/sparse.hpp"

namespace dgwc {

enum class WaveletMethod { exact, chebyshev };

// Heat-kernel wavelet operator pair: psi applies exp(-s L), psi_inverse
// applies exp(+s L), both threshold-sparsified at t.
struct WaveletBasis {
    SparseMatrix psi;
    SparseMatrix psi_inverse;
    double scale = 0.0;
    double threshold = 0.0;
    double density_psi = 0.0;
    double density_psi_inverse = 0.0;
    WaveletMethod method = WaveletMethod::exact;
    int chebyshev_order = 0;
    // spectrum metadata (exact path only; chebyshev reports the assumed [0,2])
    double lambda_min = 0.0;
    double lambda_max = 2.0;
};

// Exact basis through the dense eigendecomposition of L.
WaveletBasis wavelet_exact(const LaplacianBundle& bundle, double s, double t);

// Chebyshev-polynomial approximation on the spectral interval [0,2];
// coefficients come from the cosine quadrature rule at order+1 points.
// Up to dense_limit nodes the approximants are materialized densely and
// symmetrized before sparsification; past it, column blocks stream straight
// into the sparse result.
WaveletBasis wavelet_chebyshev(const LaplacianBundle& bundle, double s, double t, int order,
                               std::size_t dense_limit = 4096);

// Chebyshev coefficients of f on [0,2] mapped to [-1,1]; c[0] already
// halved so f(lambda) ~ sum_k c[k] T_k(lambda - 1).
std::vector<double> chebyshev_heat_coefficients(double s, int order);

struct BasisStats {
    double density_psi = 0.0;
    double density_psi_inverse = 0.0;
    // max |(psi psi_inverse - I)_ij| over the sparsified pair
    double max_offdiag_residual = 0.0;
};

BasisStats basis_stats(const WaveletBasis& basis);

// Flat binary cache (little-endian 64-bit layout, magic header).
void save_wavelet_basis(const WaveletBasis& basis, const std::string& path);
std::optional<WaveletBasis> load_wavelet_basis(const std::string& path);

// Cache file name from the identifying tuple.
std::string wavelet_cache_name(const std::string& dataset_id, double s, double t,
                               WaveletMethod method, int order);

}  // namespace dgwc
