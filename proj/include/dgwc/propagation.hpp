#pragma once

#include <memory>

#include "dgwc/graph.hpp"
#include "dgwc/wavelet.hpp"

namespace dgwc {

struct FilterConfig {
    double f = 1.0;  // diagonal constant of the static filter
};

enum class PropProvenance { fourier_only, wavelet_only, combined };

// The combined propagation operator
//   gamma * (psi F psi^{-1}) + (1 - gamma) * P
// with F = f*I. `matrix` is the assembled, symmetrized operator; when a
// wavelet term is present, apply() multiplies through the sparse factors
// (gamma*f/2 * [psi (psi^{-1} h) + psi^{-1} (psi h)] + (1-gamma) * P h),
// which is the same symmetric linear map as `matrix` up to rounding but
// avoids touching the product's fill-in on every layer.
struct PropagationOperator {
    SparseMatrix matrix;
    double gamma = 0.0;
    FilterConfig filter;
    PropProvenance provenance = PropProvenance::fourier_only;

    SparseMatrix renorm;  // P, kept for the factored apply
    std::shared_ptr<const WaveletBasis> basis;  // null when gamma == 0

    std::size_t node_count() const { return matrix.rows; }

    // op * h; the operator is symmetric, so this also serves as the
    // transpose apply in reverse-mode passes.
    DenseMatrix apply(const DenseMatrix& h) const;
};

// Assembles the operator. basis may be null only when gamma == 0.
PropagationOperator assemble(const LaplacianBundle& bundle,
                             std::shared_ptr<const WaveletBasis> basis, double gamma,
                             FilterConfig filter);

// max |gamma*(psi (f I) psi^{-1}) - gamma*f*(psi psi^{-1})| over all entries;
// the scalar filter commutes, so this is rounding noise.
double scalar_absorption_check(const WaveletBasis& basis, double gamma, double f);

}  // namespace dgwc
