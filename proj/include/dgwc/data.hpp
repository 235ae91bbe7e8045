#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgwc/graph.hpp"

namespace dgwc {

struct DatasetSplit {
    std::vector<std::uint32_t> train;
    std::vector<std::uint32_t> validation;  // 500 for the citation protocols
    std::vector<std::uint32_t> test;        // 1000 for the citation protocols
    double label_rate = 0.0;
    std::uint64_t seed = 0;
};

// Plain-text citation format:
//   content: <id>\t<feat_1>\t...\t<feat_p>\t<label> per line
//   cites:   <cited-id>\t<citing-id> per line
// Node ids become dense indices in first-appearance order of the content
// file; labels map to [0,C) in lexicographic order; cite rows referencing
// unknown ids are dropped and counted in Graph::dropped_edges.
Graph load_content_cites(const std::string& content_path, const std::string& cites_path);

// In-place unit-row-sum normalization of the feature matrix (zero rows stay
// zero).
void row_normalize_features(Graph& g);

// 20 lowest-index nodes per class for training; the 500 lowest-index
// non-train nodes for validation; the 1000 highest-index remaining nodes for
// testing. Deterministic; `seed` is recorded only.
DatasetSplit standard_split(const Graph& g, std::uint64_t seed);

// round(rate*n) training nodes, class-stratified within +-1 of exact
// proportionality (each class at least 1), then 500 validation and 1000 test
// nodes sampled from the remainder; all draws from the seeded stream.
DatasetSplit rate_split(const Graph& g, double rate, std::uint64_t seed);

// Two k-cliques joined by one bridge edge; labels by clique; features are a
// one-hot community indicator plus one seeded noise column.
Graph synthetic_two_clique(std::size_t k, std::uint64_t seed);

}  // namespace dgwc
