#pragma once

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netslab/errors.hpp"

namespace netslab {

using Index = std::ptrdiff_t;

// Unordered node pair stored canonically (first < second).
struct NodePair {
    Index first = 0;
    Index second = 0;

    NodePair() = default;
    NodePair(Index a, Index b) : first(std::min(a, b)), second(std::max(a, b)) {
        if (a == b) throw input_error("interaction pair has a repeated member: " + std::to_string(a));
    }

    friend bool operator==(const NodePair&, const NodePair&) = default;
    friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

// One pathway: an ordered node list plus main-effect edges (by node index).
struct GeneNetwork {
    std::string id;
    std::vector<std::string> nodes;
    std::vector<NodePair> edges;  // canonical, sorted, de-duplicated

    Index size() const { return static_cast<Index>(nodes.size()); }
};

// Builds a GeneNetwork from gene ids, validating node references.
inline GeneNetwork make_network(std::string id, std::vector<std::string> nodes,
                                const std::vector<std::pair<std::string, std::string>>& edge_ids) {
    if (nodes.empty()) throw input_error("network '" + id + "' has no nodes");
    std::unordered_map<std::string, Index> pos;
    for (Index i = 0; i < static_cast<Index>(nodes.size()); ++i) {
        if (!pos.emplace(nodes[i], i).second)
            throw input_error("network '" + id + "' lists node '" + nodes[i] + "' twice");
    }
    GeneNetwork net{std::move(id), std::move(nodes), {}};
    net.edges.reserve(edge_ids.size());
    for (const auto& [u, v] : edge_ids) {
        auto iu = pos.find(u);
        if (iu == pos.end()) throw input_error("network '" + net.id + "' edge references unknown node '" + u + "'");
        auto iv = pos.find(v);
        if (iv == pos.end()) throw input_error("network '" + net.id + "' edge references unknown node '" + v + "'");
        if (iu->second == iv->second)
            throw input_error("network '" + net.id + "' has a self-loop edge at node '" + u + "'");
        net.edges.emplace_back(iu->second, iv->second);
    }
    std::sort(net.edges.begin(), net.edges.end());
    net.edges.erase(std::unique(net.edges.begin(), net.edges.end()), net.edges.end());
    return net;
}

// Symmetric 0/1 matrix with zero diagonal.
class AdjacencyMatrix {
public:
    AdjacencyMatrix() : m_(0, 0) {}
    explicit AdjacencyMatrix(Index dim) : m_(Eigen::MatrixXd::Zero(dim, dim)) {}

    Index dim() const { return m_.rows(); }
    double operator()(Index i, Index j) const { return m_(i, j); }
    const Eigen::MatrixXd& matrix() const { return m_; }

    void set_edge(Index i, Index j) {
        check_index(i);
        check_index(j);
        if (i == j) throw input_error("adjacency matrix rejects self-loop at index " + std::to_string(i));
        m_(i, j) = 1.0;
        m_(j, i) = 1.0;
    }

    Eigen::VectorXd degrees() const { return m_.rowwise().sum(); }

    void check_index(Index i) const {
        if (i < 0 || i >= dim()) throw input_error("node index " + std::to_string(i) + " out of range [0, " +
                                                   std::to_string(dim()) + ")");
    }

private:
    Eigen::MatrixXd m_;
};

inline AdjacencyMatrix build_main_adjacency(const GeneNetwork& network) {
    AdjacencyMatrix adj(network.size());
    for (const auto& e : network.edges) adj.set_edge(e.first, e.second);
    return adj;
}

// {node} together with its neighbors in the main graph, sorted.
inline std::vector<Index> closed_neighborhood(const AdjacencyMatrix& adj, Index node) {
    adj.check_index(node);
    std::vector<Index> out;
    for (Index l = 0; l < adj.dim(); ++l) {
        if (l == node || adj(node, l) != 0.0) out.push_back(l);
    }
    return out;
}

// Jaccard similarity between two interactions sharing a main effect; 0 when
// they share none. Neighborhoods are taken in the main graph.
inline double interaction_similarity(const AdjacencyMatrix& adj, const NodePair& pair1,
                                     const NodePair& pair2) {
    if (pair1 == pair2) throw input_error("interaction similarity undefined for identical pairs");
    adj.check_index(pair1.first);
    adj.check_index(pair1.second);
    adj.check_index(pair2.first);
    adj.check_index(pair2.second);

    // Locate the shared member, if any.
    Index shared = -1;
    Index other1 = -1, other2 = -1;
    for (Index a : {pair1.first, pair1.second}) {
        for (Index b : {pair2.first, pair2.second}) {
            if (a == b) {
                shared = a;
                other1 = (pair1.first == a) ? pair1.second : pair1.first;
                other2 = (pair2.first == a) ? pair2.second : pair2.first;
            }
        }
    }
    if (shared < 0) return 0.0;

    const auto n1 = closed_neighborhood(adj, other1);
    const auto n2 = closed_neighborhood(adj, other2);
    std::vector<Index> inter;
    std::set_intersection(n1.begin(), n1.end(), n2.begin(), n2.end(), std::back_inserter(inter));
    const double union_size = static_cast<double>(n1.size() + n2.size() - inter.size());
    return static_cast<double>(inter.size()) / union_size;
}

// Canonical interaction ordering: pairs (a,b) with a < b in node-list order,
// lexicographic. This ordering is shared with the design registry.
inline std::vector<NodePair> canonical_pairs(Index p) {
    std::vector<NodePair> pairs;
    if (p < 2) return pairs;
    pairs.reserve(static_cast<std::size_t>(p * (p - 1) / 2));
    for (Index a = 0; a < p; ++a)
        for (Index b = a + 1; b < p; ++b) pairs.emplace_back(a, b);
    return pairs;
}

// Line-graph adjacency over interactions: an edge wherever the similarity is
// positive. Rows/columns follow canonical_pairs ordering.
inline AdjacencyMatrix build_interaction_adjacency(const AdjacencyMatrix& adj) {
    const auto pairs = canonical_pairs(adj.dim());
    const Index q = static_cast<Index>(pairs.size());
    AdjacencyMatrix out(q);
    for (Index i = 0; i < q; ++i) {
        for (Index j = i + 1; j < q; ++j) {
            if (interaction_similarity(adj, pairs[i], pairs[j]) > 0.0) out.set_edge(i, j);
        }
    }
    return out;
}

}  // namespace netslab
