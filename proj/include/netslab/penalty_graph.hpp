#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "netslab/errors.hpp"
#include "netslab/gene_network.hpp"

namespace netslab {

// Per-network combined graph over main-effect and interaction slots, with the
// ridge-stabilized normalized Laplacian and its cached factorization.
struct PenaltyGraph {
    std::string network_id;
    Index n_mains = 0;
    std::vector<NodePair> pairs;       // canonical interaction ordering
    AdjacencyMatrix combined_adjacency;  // block-diag(A1, A2), dim p_k(p_k+1)/2
    Eigen::VectorXd degree;
    Eigen::MatrixXd laplacian;        // I - D^{-1/2} A D^{-1/2}
    Eigen::MatrixXd laplacian_ridge;  // laplacian + ridge * I, strictly PD
    double ridge = 1e-6;
    double log_det_ridge = 0.0;  // log det(laplacian_ridge)

    Index dim() const { return combined_adjacency.dim(); }
    Index n_interactions() const { return static_cast<Index>(pairs.size()); }
};

inline PenaltyGraph build_penalty_graph(const GeneNetwork& network, double ridge = 1e-6) {
    if (!(ridge > 0.0)) throw input_error("laplacian ridge must be positive, got " + std::to_string(ridge));

    const AdjacencyMatrix a1 = build_main_adjacency(network);
    const AdjacencyMatrix a2 = build_interaction_adjacency(a1);
    const Index p = a1.dim();
    const Index q = a2.dim();
    const Index dim = p + q;  // p_k(p_k+1)/2

    PenaltyGraph g;
    g.network_id = network.id;
    g.n_mains = p;
    g.pairs = canonical_pairs(p);
    g.ridge = ridge;

    AdjacencyMatrix combined(dim);
    for (Index i = 0; i < p; ++i)
        for (Index j = i + 1; j < p; ++j)
            if (a1(i, j) != 0.0) combined.set_edge(i, j);
    for (Index i = 0; i < q; ++i)
        for (Index j = i + 1; j < q; ++j)
            if (a2(i, j) != 0.0) combined.set_edge(p + i, p + j);
    g.combined_adjacency = std::move(combined);

    g.degree = g.combined_adjacency.degrees();

    // Normalized Laplacian with zero-degree rows mapped to the identity:
    // d_i = 0 gives D^{-1/2}_ii = 0, so L_ii = 1 and the rest of the row is 0.
    Eigen::VectorXd dinv_sqrt(dim);
    for (Index i = 0; i < dim; ++i) dinv_sqrt[i] = g.degree[i] > 0.0 ? 1.0 / std::sqrt(g.degree[i]) : 0.0;
    g.laplacian = Eigen::MatrixXd::Identity(dim, dim) -
                  dinv_sqrt.asDiagonal() * g.combined_adjacency.matrix() * dinv_sqrt.asDiagonal();
    g.laplacian_ridge = g.laplacian + ridge * Eigen::MatrixXd::Identity(dim, dim);

    Eigen::LLT<Eigen::MatrixXd> llt(g.laplacian_ridge);
    if (llt.info() != Eigen::Success)
        throw numerical_error("Cholesky of ridged Laplacian failed for network '" + network.id + "'");
    g.log_det_ridge = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return g;
}

inline std::vector<PenaltyGraph> build_penalty_graphs(const std::vector<GeneNetwork>& networks,
                                                      double ridge = 1e-6) {
    std::vector<PenaltyGraph> graphs;
    graphs.reserve(networks.size());
    for (const auto& net : networks) graphs.push_back(build_penalty_graph(net, ridge));
    return graphs;
}

}  // namespace netslab
