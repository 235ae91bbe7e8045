#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dgwc/dense.hpp"
#include "dgwc/sparse.hpp"

namespace dgwc {

// Simple undirected graph with node features and class labels. Edges are
// stored as unique (i,j) pairs with i < j; raw self-loops and duplicates are
// removed at construction.
struct Graph {
    std::size_t n = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    DenseMatrix features;          // n x p
    std::vector<int> labels;       // per node, in [0, classes)
    std::size_t num_classes = 0;

    // loader provenance
    std::vector<std::string> node_ids;     // dense index -> original id
    std::vector<std::string> label_names;  // class index -> original label
    std::size_t dropped_edges = 0;         // cite rows with unknown endpoints

    std::size_t feature_dim() const { return features.cols; }
    std::vector<std::size_t> degrees() const;
    std::vector<std::vector<std::uint32_t>> adjacency() const;
};

struct LaplacianBundle {
    DenseMatrix laplacian;            // L = I - D^{-1/2} A D^{-1/2}; empty when skipped
    SparseMatrix laplacian_sparse;    // same operator in CSR
    SparseMatrix renorm_propagation;  // D~^{-1/2} (A+I) D~^{-1/2}
    std::vector<double> degree;       // raw degrees (no self-loop)

    bool has_dense_laplacian() const { return laplacian.rows > 0; }
};

// Builds L (dense + sparse) and the self-loop renormalized propagation
// matrix. Rows of isolated nodes follow the L row = e_i convention. The
// dense L is materialized only up to `dense_limit` nodes; the sparse form is
// always present.
LaplacianBundle build_laplacian(const Graph& g, std::size_t dense_limit = 4096);

// Materializes the dense Laplacian from the sparse one (for bundles built
// past dense_limit).
DenseMatrix dense_laplacian(const LaplacianBundle& bundle);

// Partition of [0,n) into connected components. Components are ordered by
// their smallest member; nodes within a component ascend.
std::vector<std::vector<std::uint32_t>> connected_components(const Graph& g);

}  // namespace dgwc
