#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netslab/dataset.hpp"
#include "netslab/design.hpp"
#include "netslab/errors.hpp"
#include "netslab/gene_network.hpp"

namespace netslab {

// Effect layouts for synthetic data. S1: all signs positive. S2: the second
// important network and the cross-network pairs flip sign. S3: signs
// alternate along each network's effect sequence. S4: like S1 but the
// interaction template avoids the hub gene entirely.
enum class Scenario { S1, S2, S3, S4 };

enum class EdgeModel { complete, star };

inline std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::S1: return "S1";
        case Scenario::S2: return "S2";
        case Scenario::S3: return "S3";
        case Scenario::S4: return "S4";
    }
    throw contract_error("unknown scenario");
}

inline Scenario scenario_from_string(const std::string& s) {
    if (s == "S1" || s == "s1") return Scenario::S1;
    if (s == "S2" || s == "s2") return Scenario::S2;
    if (s == "S3" || s == "s3") return Scenario::S3;
    if (s == "S4" || s == "s4") return Scenario::S4;
    throw input_error("unknown scenario '" + s + "', expected S1..S4");
}

inline std::string to_string(EdgeModel m) {
    return m == EdgeModel::complete ? "complete" : "star";
}

inline EdgeModel edge_model_from_string(const std::string& s) {
    if (s == "complete") return EdgeModel::complete;
    if (s == "star") return EdgeModel::star;
    throw input_error("unknown edge model '" + s + "', expected complete|star");
}

struct SimConfig {
    Index n_train = 300;
    Index n_test = 100;
    Index p = 1000;  // genes in total, split evenly across networks
    Index K = 100;   // networks; the first three carry signal
    double rho = 0.4;              // hub-target correlation
    double signal_ratio = 1.0 / std::sqrt(5.0);  // non-hub coefficient scale relative to the hub
    Scenario scenario = Scenario::S1;
    EdgeModel edge_model = EdgeModel::complete;
    double noise_variance = 1.0;
    std::uint64_t seed = 1;
};

inline void validate_sim_config(const SimConfig& c) {
    if (c.n_train < 2) throw input_error("n_train must be at least 2");
    if (c.n_test < 1) throw input_error("n_test must be at least 1");
    if (c.K < 3) throw input_error("need at least 3 networks, got " + std::to_string(c.K));
    if (c.p <= 0 || c.p % c.K != 0)
        throw input_error("p = " + std::to_string(c.p) + " must divide evenly across K = " + std::to_string(c.K) +
                          " networks");
    if (c.p / c.K < 6)
        throw input_error("each network needs at least 6 genes (hub + 5 targets), got " +
                          std::to_string(c.p / c.K));
    if (!(c.rho > -1.0 && c.rho < 1.0)) throw input_error("rho must lie in (-1, 1)");
    if (!(c.signal_ratio > 0.0)) throw input_error("signal_ratio must be positive");
    if (!(c.noise_variance > 0.0)) throw input_error("noise_variance must be positive");
}

struct TruthMain {
    Index slot = -1;  // registry slot
    Index gene = -1;  // dataset column
    double coef = 0.0;
};

struct TruthInteraction {
    Index gene_a = -1;  // dataset columns, gene_a < gene_b
    Index gene_b = -1;
    double coef = 0.0;
    Index slot = -1;  // registry slot; -1 for cross-network pairs
};

struct GroundTruth {
    std::vector<TruthMain> mains;
    std::vector<TruthInteraction> interactions;
    std::vector<std::string> networks;   // ids of signal-carrying networks
    Eigen::VectorXd slot_coefficients;   // truth over registry slots; cross pairs not representable
};

struct Simulation {
    std::vector<GeneNetwork> networks;
    ColumnRegistry registry;
    Dataset train;
    Dataset test;
    GroundTruth truth;
};

namespace detail {

inline std::string padded_label(const char* prefix, Index i, Index max_value) {
    std::string digits = std::to_string(max_value);
    std::string s = std::to_string(i);
    return std::string(prefix) + std::string(digits.size() - s.size(), '0') + s;
}

inline Eigen::MatrixXd draw_gene_matrix(const SimConfig& c, Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Index pk = c.p / c.K;
    const double shrink = std::sqrt(1.0 - c.rho * c.rho);
    Eigen::MatrixXd X(n, c.p);
    for (Index k = 0; k < c.K; ++k) {
        const Index base = k * pk;
        for (Index i = 0; i < n; ++i) X(i, base) = gauss(rng);
        for (Index t = 1; t < pk; ++t)
            for (Index i = 0; i < n; ++i) X(i, base + t) = c.rho * X(i, base) + shrink * gauss(rng);
    }
    return X;
}

}  // namespace detail

inline std::vector<GeneNetwork> generate_networks(const SimConfig& c) {
    validate_sim_config(c);
    const Index pk = c.p / c.K;
    std::vector<GeneNetwork> nets;
    nets.reserve(static_cast<std::size_t>(c.K));
    for (Index k = 0; k < c.K; ++k) {
        std::vector<std::string> nodes;
        nodes.reserve(static_cast<std::size_t>(pk));
        for (Index t = 0; t < pk; ++t) nodes.push_back(detail::padded_label("g", k * pk + t, c.p - 1));
        std::vector<std::pair<std::string, std::string>> edges;
        if (c.edge_model == EdgeModel::complete) {
            for (Index a = 0; a < pk; ++a)
                for (Index b = a + 1; b < pk; ++b)
                    edges.emplace_back(nodes[static_cast<std::size_t>(a)], nodes[static_cast<std::size_t>(b)]);
        } else {
            for (Index b = 1; b < pk; ++b) edges.emplace_back(nodes[0], nodes[static_cast<std::size_t>(b)]);
        }
        nets.push_back(make_network(detail::padded_label("net", k, c.K - 1), std::move(nodes), edges));
    }
    return nets;
}

// Places the fixed effect template on the first three networks: the hub gene
// plus five targets as mains, five interactions per network, and two pairs
// that straddle the first two networks. Hub coefficients are drawn once; all
// other magnitudes are signal_ratio times their network's hub coefficient.
inline GroundTruth assign_effects(const SimConfig& c, const ColumnRegistry& registry,
                                  std::mt19937_64& rng) {
    validate_sim_config(c);
    const Index pk = c.p / c.K;
    std::uniform_real_distribution<double> unif(0.8, 1.2);
    double hub_coef[3];
    for (double& u : hub_coef) u = unif(rng);

    using LocalPair = std::pair<Index, Index>;
    const std::vector<LocalPair> with_hub = {{0, 1}, {0, 2}, {1, 2}, {3, 4}, {4, 5}};
    const std::vector<LocalPair> no_hub = {{1, 2}, {1, 3}, {2, 3}, {3, 4}, {4, 5}};
    const auto& tmpl = c.scenario == Scenario::S4 ? no_hub : with_hub;

    GroundTruth truth;
    truth.slot_coefficients = Eigen::VectorXd::Zero(registry.total_dim());

    const auto apply_sign = [&](Index net, Index position, double magnitude) {
        switch (c.scenario) {
            case Scenario::S1:
            case Scenario::S4: return magnitude;
            case Scenario::S2: return net == 1 ? -magnitude : magnitude;
            case Scenario::S3: return position % 2 == 0 ? magnitude : -magnitude;
        }
        throw contract_error("unknown scenario");
    };

    for (Index net = 0; net < 3; ++net) {
        const Index off = registry.offsets[static_cast<std::size_t>(net)];
        const Index base = net * pk;
        Index position = 0;
        for (Index t = 0; t < 6; ++t, ++position) {
            const double mag = t == 0 ? hub_coef[net] : c.signal_ratio * hub_coef[net];
            TruthMain tm;
            tm.slot = off + t;  // mains occupy the first p_k slots of each block
            tm.gene = base + t;
            tm.coef = apply_sign(net, position, mag);
            truth.slot_coefficients[tm.slot] = tm.coef;
            truth.mains.push_back(tm);
        }
        for (const auto& [la, lb] : tmpl) {
            TruthInteraction ti;
            ti.gene_a = base + la;
            ti.gene_b = base + lb;
            ti.coef = apply_sign(net, position++, c.signal_ratio * hub_coef[net]);
            // pair slots follow the mains in canonical (a < b) lexicographic order
            const Index pair_rank = la * pk - la * (la + 1) / 2 + (lb - la - 1);
            ti.slot = off + pk + pair_rank;
            truth.slot_coefficients[ti.slot] = ti.coef;
            truth.interactions.push_back(ti);
        }
        truth.networks.push_back(registry.network_ids[static_cast<std::size_t>(net)]);
    }

    // two pairs across the first two networks; not representable as slots
    for (Index t = 1; t <= 2; ++t) {
        TruthInteraction ti;
        ti.gene_a = t;
        ti.gene_b = pk + t;
        double mag = c.signal_ratio * hub_coef[0];
        if (c.scenario == Scenario::S2) mag = -mag;
        if (c.scenario == Scenario::S3 && t == 2) mag = -mag;
        ti.coef = mag;
        truth.interactions.push_back(ti);
    }
    return truth;
}

inline Eigen::VectorXd truth_signal(const GroundTruth& truth, const Eigen::MatrixXd& X) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(X.rows());
    for (const TruthMain& tm : truth.mains) s += tm.coef * X.col(tm.gene);
    for (const TruthInteraction& ti : truth.interactions)
        s += ti.coef * X.col(ti.gene_a).cwiseProduct(X.col(ti.gene_b));
    return s;
}

// Draw order is fixed (train X, test X, hub coefficients, train noise, test
// noise) so a seed pins the whole replicate.
inline Simulation simulate(const SimConfig& c) {
    validate_sim_config(c);
    std::mt19937_64 rng(c.seed);

    Simulation sim;
    sim.networks = generate_networks(c);

    std::vector<std::string> gene_ids;
    gene_ids.reserve(static_cast<std::size_t>(c.p));
    for (const GeneNetwork& net : sim.networks)
        gene_ids.insert(gene_ids.end(), net.nodes.begin(), net.nodes.end());

    Eigen::MatrixXd X_train = detail::draw_gene_matrix(c, c.n_train, rng);
    Eigen::MatrixXd X_test = detail::draw_gene_matrix(c, c.n_test, rng);

    sim.train = Dataset{std::move(X_train), Eigen::VectorXd::Zero(c.n_train), gene_ids};
    sim.test = Dataset{std::move(X_test), Eigen::VectorXd::Zero(c.n_test), gene_ids};
    sim.registry = build_registry(sim.networks, sim.train);
    sim.truth = assign_effects(c, sim.registry, rng);

    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sd = std::sqrt(c.noise_variance);
    sim.train.y = truth_signal(sim.truth, sim.train.X);
    for (Index i = 0; i < c.n_train; ++i) sim.train.y[i] += sd * gauss(rng);
    sim.test.y = truth_signal(sim.truth, sim.test.X);
    for (Index i = 0; i < c.n_test; ++i) sim.test.y[i] += sd * gauss(rng);
    return sim;
}

}  // namespace netslab
