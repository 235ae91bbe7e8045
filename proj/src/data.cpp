#include "dgwc/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "dgwc/error.hpp"
#include "dgwc/rng.hpp"

namespace dgwc {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
        fields.back().pop_back();
    return fields;
}

double parse_feature(const std::string& s, const std::string& path, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        require(pos == s.size(), path, ":", line_no, ": malformed feature value '", s, "'");
        return v;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        fail(path, ":", line_no, ": malformed feature value '", s, "'");
    }
}

}  // namespace

Graph load_content_cites(const std::string& content_path, const std::string& cites_path) {
    std::ifstream content(content_path);
    require(content.good(), "load_content_cites: cannot open ", content_path);

    struct Row {
        std::string id;
        std::vector<double> feats;
        std::string label;
    };
    std::vector<Row> rows;
    std::unordered_map<std::string, std::uint32_t> index_of;
    std::string line;
    std::size_t line_no = 0;
    std::size_t feature_dim = 0;
    while (std::getline(content, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_tabs(line);
        require(fields.size() >= 3, content_path, ":", line_no,
                ": expected <id> <features...> <label>, got ", fields.size(), " fields");
        if (feature_dim == 0) feature_dim = fields.size() - 2;
        require(fields.size() - 2 == feature_dim, content_path, ":", line_no, ": row has ",
                fields.size() - 2, " features, expected ", feature_dim);
        Row row;
        row.id = fields.front();
        row.label = fields.back();
        require(!row.id.empty(), content_path, ":", line_no, ": empty node id");
        require(!row.label.empty(), content_path, ":", line_no, ": empty label");
        row.feats.reserve(feature_dim);
        for (std::size_t k = 1; k + 1 < fields.size(); ++k)
            row.feats.push_back(parse_feature(fields[k], content_path, line_no));
        const auto [it, inserted] =
            index_of.emplace(row.id, static_cast<std::uint32_t>(rows.size()));
        (void)it;
        require(inserted, content_path, ":", line_no, ": duplicate node id '", row.id, "'");
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), "load_content_cites: ", content_path, " has no rows");

    Graph g;
    g.n = rows.size();
    g.features = DenseMatrix(g.n, feature_dim);
    g.node_ids.reserve(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        g.node_ids.push_back(rows[i].id);
        for (std::size_t j = 0; j < feature_dim; ++j) g.features(i, j) = rows[i].feats[j];
    }

    // labels in lexicographic order
    std::map<std::string, int> label_index;
    for (const auto& row : rows) label_index.emplace(row.label, 0);
    int next = 0;
    for (auto& [name, idx] : label_index) idx = next++;
    g.num_classes = label_index.size();
    g.label_names.resize(g.num_classes);
    for (const auto& [name, idx] : label_index) g.label_names[static_cast<std::size_t>(idx)] = name;
    g.labels.reserve(g.n);
    for (const auto& row : rows) g.labels.push_back(label_index.at(row.label));

    std::ifstream cites(cites_path);
    require(cites.good(), "load_content_cites: cannot open ", cites_path);
    std::set<std::pair<std::uint32_t, std::uint32_t>> edge_set;
    line_no = 0;
    while (std::getline(cites, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_tabs(line);
        require(fields.size() == 2, cites_path, ":", line_no,
                ": expected <cited-id> <citing-id>, got ", fields.size(), " fields");
        const auto a = index_of.find(fields[0]);
        const auto b = index_of.find(fields[1]);
        if (a == index_of.end() || b == index_of.end()) {
            ++g.dropped_edges;
            continue;
        }
        if (a->second == b->second) continue;  // raw self-loops dropped
        const std::uint32_t lo = std::min(a->second, b->second);
        const std::uint32_t hi = std::max(a->second, b->second);
        edge_set.emplace(lo, hi);
    }
    g.edges.assign(edge_set.begin(), edge_set.end());
    return g;
}

void row_normalize_features(Graph& g) {
    for (std::size_t i = 0; i < g.features.rows; ++i) {
        double* row = g.features.row(i);
        double sum = 0.0;
        for (std::size_t j = 0; j < g.features.cols; ++j) sum += row[j];
        if (sum == 0.0) continue;
        for (std::size_t j = 0; j < g.features.cols; ++j) row[j] /= sum;
    }
}

DatasetSplit standard_split(const Graph& g, std::uint64_t seed) {
    constexpr std::size_t kPerClass = 20;

    std::vector<std::size_t> class_count(g.num_classes, 0);
    for (int label : g.labels) ++class_count[static_cast<std::size_t>(label)];
    for (std::size_t c = 0; c < g.num_classes; ++c)
        require(class_count[c] >= kPerClass, "standard_split: class ", c, " has only ",
                class_count[c], " nodes, needs ", kPerClass);
    const std::size_t train_size = kPerClass * g.num_classes;
    require(g.n >= train_size + 3, "standard_split: graph has ", g.n,
            " nodes, nothing left for validation/test after ", train_size);

    // protocol sizes when the graph affords them; proportional fallback on
    // toy graphs (validation:test stays 1:2)
    const std::size_t remaining = g.n - train_size;
    const std::size_t validation_size = std::min<std::size_t>(500, remaining / 3);
    const std::size_t test_size = std::min<std::size_t>(1000, remaining - validation_size);

    DatasetSplit split;
    split.seed = seed;
    split.label_rate = static_cast<double>(train_size) / static_cast<double>(g.n);

    std::vector<char> taken(g.n, 0);
    std::vector<std::size_t> picked(g.num_classes, 0);
    for (std::uint32_t i = 0; i < g.n; ++i) {
        auto& count = picked[static_cast<std::size_t>(g.labels[i])];
        if (count < kPerClass) {
            ++count;
            taken[i] = 1;
            split.train.push_back(i);
        }
    }
    for (std::uint32_t i = 0; i < g.n && split.validation.size() < validation_size; ++i) {
        if (!taken[i]) {
            taken[i] = 1;
            split.validation.push_back(i);
        }
    }
    for (std::uint32_t i = static_cast<std::uint32_t>(g.n);
         i-- > 0 && split.test.size() < test_size;) {
        if (!taken[i]) {
            taken[i] = 1;
            split.test.push_back(i);
        }
    }
    std::sort(split.test.begin(), split.test.end());
    return split;
}

DatasetSplit rate_split(const Graph& g, double rate, std::uint64_t seed) {
    constexpr std::size_t kValidation = 500;
    constexpr std::size_t kTest = 1000;
    require(rate > 0.0 && rate < 1.0, "rate_split: rate must be in (0,1), got ", rate);
    const std::size_t train_size =
        static_cast<std::size_t>(std::llround(rate * static_cast<double>(g.n)));
    require(train_size >= g.num_classes, "rate_split: rate ", rate, " yields ", train_size,
            " training nodes, fewer than ", g.num_classes, " classes");
    require(train_size + kValidation + kTest <= g.n, "rate_split: rate ", rate, " needs ",
            train_size + kValidation + kTest, " nodes, graph has ", g.n);

    std::vector<std::vector<std::uint32_t>> by_class(g.num_classes);
    for (std::uint32_t i = 0; i < g.n; ++i)
        by_class[static_cast<std::size_t>(g.labels[i])].push_back(i);

    // largest-remainder apportioning of train_size across classes,
    // proportional to class sizes, each class >= 1
    std::vector<std::size_t> quota(g.num_classes, 0);
    std::vector<double> exact(g.num_classes, 0.0);
    std::vector<std::pair<double, std::size_t>> remainder;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < g.num_classes; ++c) {
        exact[c] = static_cast<double>(train_size) * static_cast<double>(by_class[c].size()) /
                   static_cast<double>(g.n);
        quota[c] = static_cast<std::size_t>(exact[c]);
        remainder.push_back({exact[c] - static_cast<double>(quota[c]), c});
        assigned += quota[c];
    }
    std::sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (std::size_t k = 0; assigned < train_size; ++k, ++assigned)
        ++quota[remainder[k % remainder.size()].second];
    for (std::size_t c = 0; c < g.num_classes; ++c) {
        if (quota[c] == 0) {
            // steal from the class with the most slack over its exact share
            std::size_t donor = g.num_classes;
            double best_slack = -1.0;
            for (std::size_t d = 0; d < g.num_classes; ++d) {
                if (quota[d] <= 1) continue;
                const double slack = static_cast<double>(quota[d]) - exact[d];
                if (slack > best_slack) {
                    best_slack = slack;
                    donor = d;
                }
            }
            require(donor < g.num_classes, "rate_split: cannot cover class ", c);
            --quota[donor];
            ++quota[c];
        }
        require(quota[c] <= by_class[c].size(), "rate_split: class ", c, " has ",
                by_class[c].size(), " nodes, quota ", quota[c]);
    }

    DatasetSplit split;
    split.seed = seed;
    split.label_rate = static_cast<double>(train_size) / static_cast<double>(g.n);

    Rng rng(hash_combine(seed, 0x53504c49u));  // "SPLI"
    std::vector<char> taken(g.n, 0);
    for (std::size_t c = 0; c < g.num_classes; ++c) {
        auto& nodes = by_class[c];
        rng.shuffle(nodes.data(), nodes.size());
        for (std::size_t k = 0; k < quota[c]; ++k) {
            split.train.push_back(nodes[k]);
            taken[nodes[k]] = 1;
        }
    }
    std::sort(split.train.begin(), split.train.end());

    std::vector<std::uint32_t> rest;
    rest.reserve(g.n - train_size);
    for (std::uint32_t i = 0; i < g.n; ++i)
        if (!taken[i]) rest.push_back(i);
    rng.shuffle(rest.data(), rest.size());
    split.validation.assign(rest.begin(), rest.begin() + kValidation);
    split.test.assign(rest.begin() + kValidation, rest.begin() + kValidation + kTest);
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

Graph synthetic_two_clique(std::size_t k, std::uint64_t seed) {
    require(k >= 3, "synthetic_two_clique: k must be >= 3, got ", k);
    Graph g;
    g.n = 2 * k;
    g.num_classes = 2;
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j)
                g.edges.push_back({static_cast<std::uint32_t>(c * k + i),
                                   static_cast<std::uint32_t>(c * k + j)});
    g.edges.push_back({0, static_cast<std::uint32_t>(k)});  // bridge
    std::sort(g.edges.begin(), g.edges.end());

    Rng rng(hash_combine(seed, 0x434c4951u));  // "CLIQ"
    g.features = DenseMatrix(g.n, 3);
    g.labels.resize(g.n);
    g.node_ids.reserve(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        const int community = i < k ? 0 : 1;
        g.labels[i] = community;
        g.features(i, static_cast<std::size_t>(community)) = 1.0;
        g.features(i, 2) = rng.next_unit();
        g.node_ids.push_back("s" + std::to_string(i));
    }
    g.label_names = {"community-a", "community-b"};
    return g;
}

}  // namespace dgwc
