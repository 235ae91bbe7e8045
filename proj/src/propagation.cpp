#include "dgwc/propagation.hpp"

#include <cmath>

#include "dgwc/kernels.hpp"

namespace dgwc {

DenseMatrix PropagationOperator::apply(const DenseMatrix& h) const {
    require(matrix.cols == h.rows, "PropagationOperator::apply: operator is ", matrix.rows,
            "x", matrix.cols, ", input is ", h.rows, "x", h.cols);
    if (!basis) return kernels::spmm(matrix, h);

    const double wavelet_weight = 0.5 * gamma * filter.f;
    DenseMatrix out = kernels::spmm(basis->psi, kernels::spmm(basis->psi_inverse, h));
    const DenseMatrix ba = kernels::spmm(basis->psi_inverse, kernels::spmm(basis->psi, h));
    const bool with_fourier = gamma < 1.0;
    DenseMatrix fourier;
    if (with_fourier) fourier = kernels::spmm(renorm, h);
#pragma omp parallel for schedule(static) if (out.rows > 64)
    for (std::size_t i = 0; i < out.rows; ++i) {
        double* orow = out.row(i);
        const double* brow = ba.row(i);
        const double* frow = with_fourier ? fourier.row(i) : nullptr;
        for (std::size_t j = 0; j < out.cols; ++j) {
            orow[j] = wavelet_weight * (orow[j] + brow[j]);
            if (frow) orow[j] += (1.0 - gamma) * frow[j];
        }
    }
    return out;
}

PropagationOperator assemble(const LaplacianBundle& bundle,
                             std::shared_ptr<const WaveletBasis> basis, double gamma,
                             FilterConfig filter) {
    require(std::isfinite(gamma) && gamma >= 0.0 && gamma <= 1.0,
            "assemble: gamma must be in [0,1], got ", gamma);
    require(std::isfinite(filter.f) && filter.f > 0.0,
            "assemble: filter constant must be positive, got ", filter.f);
    require(gamma == 0.0 || basis != nullptr,
            "assemble: gamma = ", gamma, " > 0 requires a wavelet basis");

    PropagationOperator op;
    op.gamma = gamma;
    op.filter = filter;
    op.renorm = bundle.renorm_propagation;

    if (gamma == 0.0) {
        op.matrix = bundle.renorm_propagation;
        op.provenance = PropProvenance::fourier_only;
        return op;
    }

    require(basis->psi.rows == bundle.renorm_propagation.rows,
            "assemble: basis is ", basis->psi.rows, "x", basis->psi.cols,
            ", propagation matrix is ", bundle.renorm_propagation.rows, "x",
            bundle.renorm_propagation.cols);

    op.basis = basis;
    op.provenance = gamma == 1.0 ? PropProvenance::wavelet_only : PropProvenance::combined;

    // scalar filter absorbed: gamma*(psi (f I) psi^{-1}) = gamma*f*(psi psi^{-1})
    const SparseMatrix pair = kernels::spgemm(basis->psi, basis->psi_inverse);
    SparseMatrix combined = add_scaled(gamma * filter.f, pair, 1.0 - gamma,
                                       bundle.renorm_propagation);
    op.matrix = symmetrized(combined);
    return op;
}

double scalar_absorption_check(const WaveletBasis& basis, double gamma, double f) {
    const SparseMatrix lhs =
        scaled(kernels::spgemm(scaled(basis.psi, f), basis.psi_inverse), gamma);
    const SparseMatrix rhs =
        scaled(kernels::spgemm(basis.psi, basis.psi_inverse), gamma * f);
    const SparseMatrix diff = add_scaled(1.0, lhs, -1.0, rhs);
    double max_abs = 0.0;
    for (double v : diff.values) max_abs = std::max(max_abs, std::fabs(v));
    return max_abs;
}

}  // namespace dgwc
