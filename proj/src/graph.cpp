#include "dgwc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "dgwc/error.hpp"

namespace dgwc {

std::vector<std::size_t> Graph::degrees() const {
    std::vector<std::size_t> deg(n, 0);
    for (const auto& [a, b] : edges) {
        ++deg[a];
        ++deg[b];
    }
    return deg;
}

std::vector<std::vector<std::uint32_t>> Graph::adjacency() const {
    std::vector<std::vector<std::uint32_t>> adj(n);
    for (const auto& [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
    return adj;
}

LaplacianBundle build_laplacian(const Graph& g, std::size_t dense_limit) {
    for (const auto& [a, b] : g.edges) {
        require(a < g.n && b < g.n, "build_laplacian: edge (", a, ",", b,
                ") outside node range [0,", g.n, ")");
        require(a != b, "build_laplacian: self-loop at node ", a);
    }

    LaplacianBundle bundle;
    const std::size_t n = g.n;
    const auto deg = g.degrees();
    bundle.degree.resize(n);
    for (std::size_t i = 0; i < n; ++i) bundle.degree[i] = static_cast<double>(deg[i]);

    // inverse square roots; isolated nodes contribute nothing to the
    // off-diagonal term (L row = e_i convention)
    std::vector<double> inv_sqrt(n, 0.0), inv_sqrt_aug(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (deg[i] > 0) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(deg[i]));
        inv_sqrt_aug[i] = 1.0 / std::sqrt(static_cast<double>(deg[i]) + 1.0);
    }

    const auto adj = g.adjacency();

    // L in CSR: diagonal 1 (0 for isolated nodes, so each component keeps a
    // zero eigenvalue), off-diagonal -1/sqrt(d_i d_j)
    SparseMatrix& L = bundle.laplacian_sparse;
    L = SparseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (deg[i] == 0) {
            L.row_offsets[i + 1] = L.values.size();
            continue;
        }
        bool diag_done = false;
        for (std::uint32_t j : adj[i]) {
            if (!diag_done && j > i) {
                L.col_indices.push_back(static_cast<std::uint32_t>(i));
                L.values.push_back(1.0);
                diag_done = true;
            }
            L.col_indices.push_back(j);
            L.values.push_back(-inv_sqrt[i] * inv_sqrt[j]);
        }
        if (!diag_done) {
            L.col_indices.push_back(static_cast<std::uint32_t>(i));
            L.values.push_back(1.0);
        }
        L.row_offsets[i + 1] = L.values.size();
    }

    // renormalized propagation: diagonal 1/(d_i+1), off-diagonal
    // 1/sqrt((d_i+1)(d_j+1))
    SparseMatrix& P = bundle.renorm_propagation;
    P = SparseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        bool diag_done = false;
        for (std::uint32_t j : adj[i]) {
            if (!diag_done && j > i) {
                P.col_indices.push_back(static_cast<std::uint32_t>(i));
                P.values.push_back(inv_sqrt_aug[i] * inv_sqrt_aug[i]);
                diag_done = true;
            }
            P.col_indices.push_back(j);
            P.values.push_back(inv_sqrt_aug[i] * inv_sqrt_aug[j]);
        }
        if (!diag_done) {
            P.col_indices.push_back(static_cast<std::uint32_t>(i));
            P.values.push_back(inv_sqrt_aug[i] * inv_sqrt_aug[i]);
        }
        P.row_offsets[i + 1] = P.values.size();
    }

    if (n <= dense_limit) bundle.laplacian = bundle.laplacian_sparse.to_dense();
    return bundle;
}

DenseMatrix dense_laplacian(const LaplacianBundle& bundle) {
    if (bundle.has_dense_laplacian()) return bundle.laplacian;
    return bundle.laplacian_sparse.to_dense();
}

std::vector<std::vector<std::uint32_t>> connected_components(const Graph& g) {
    const auto adj = g.adjacency();
    std::vector<std::vector<std::uint32_t>> components;
    std::vector<char> visited(g.n, 0);
    for (std::size_t start = 0; start < g.n; ++start) {
        if (visited[start]) continue;
        std::vector<std::uint32_t> comp;
        std::queue<std::uint32_t> frontier;
        frontier.push(static_cast<std::uint32_t>(start));
        visited[start] = 1;
        while (!frontier.empty()) {
            const std::uint32_t u = frontier.front();
            frontier.pop();
            comp.push_back(u);
            for (std::uint32_t v : adj[u]) {
                if (!visited[v]) {
                    visited[v] = 1;
                    frontier.push(v);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
    }
    return components;
}

}  // namespace dgwc
