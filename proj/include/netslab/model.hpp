#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netslab/design.hpp"
#include "netslab/errors.hpp"

namespace netslab {

struct Hyperparameters {
    double s1 = 1.0;        // slab variance, fixed
    double s2 = 0.01;       // spike variance, tuned by BIC
    double a = 1.0;         // Beta prior on zeta
    double b = 1.0;
    double ridge = 1e-6;    // Laplacian ridge xi
    double threshold = 0.5;
};

inline void validate_hyperparameters(const Hyperparameters& h) {
    if (!(h.s1 > h.s2 && h.s2 > 0.0))
        throw input_error("hyperparameters require s1 > s2 > 0, got s1=" + std::to_string(h.s1) +
                          " s2=" + std::to_string(h.s2));
    if (!(h.a > 0.0 && h.b > 0.0)) throw input_error("Beta prior parameters must be positive");
    if (!(h.ridge > 0.0)) throw input_error("Laplacian ridge must be positive");
    if (!(h.threshold >= 0.0 && h.threshold < 1.0)) throw input_error("selection threshold must lie in [0,1)");
}

// All variational parameters plus the point model parameters (tau, theta).
struct VariationalState {
    Eigen::VectorXd m;        // coefficient posterior means
    Eigen::VectorXd sigma2;   // coefficient posterior variances
    Eigen::VectorXd eta;      // E_q[beta_j]
    Eigen::VectorXd a_tilde;  // Beta parameters of q(zeta_j)
    Eigen::VectorXd b_tilde;
    Eigen::VectorXd r;        // E_q[alpha_k]
    double tau = 1.0;
    double theta = 0.5;
    std::vector<double> elbo_trace;

    Index total_dim() const { return m.size(); }
    Index n_networks() const { return r.size(); }
};

struct SelectionResult {
    std::vector<Index> selected_mains;         // global slot indices, ascending
    std::vector<Index> selected_interactions;  // global slot indices, ascending
    std::vector<std::string> selected_networks;
    Eigen::VectorXd eta;           // snapshot at selection time
    Eigen::VectorXd r;
    Eigen::VectorXd coefficients;  // m truncated to selected slots, zeros elsewhere

    // Duplicate-collapsed views (filled by dedup_selection).
    std::vector<std::string> distinct_mains;
    std::vector<std::pair<std::string, std::string>> distinct_interactions;
};

// Strict thresholding of eta (slots) and r (networks).
inline SelectionResult select(const VariationalState& state, const ColumnRegistry& registry,
                              double threshold = 0.5) {
    SelectionResult sel;
    sel.eta = state.eta;
    sel.r = state.r;
    sel.coefficients = Eigen::VectorXd::Zero(state.total_dim());
    for (Index j = 0; j < state.total_dim(); ++j) {
        if (state.eta[j] > threshold) {
            sel.coefficients[j] = state.m[j];
            if (registry.slots[static_cast<std::size_t>(j)].kind == SlotKind::main)
                sel.selected_mains.push_back(j);
            else
                sel.selected_interactions.push_back(j);
        }
    }
    for (Index k = 0; k < state.n_networks(); ++k)
        if (state.r[k] > threshold) sel.selected_networks.push_back(registry.network_ids[static_cast<std::size_t>(k)]);
    return sel;
}

// Collapses duplicate slots to distinct genes/pairs: a distinct gene (pair)
// is selected iff any of its slots is.
inline SelectionResult dedup_selection(const SelectionResult& selection, const ColumnRegistry& registry,
                                       const std::vector<std::string>& gene_ids) {
    SelectionResult out = selection;
    std::set<std::string> mains;
    std::set<std::pair<std::string, std::string>> pairs;
    for (Index j : selection.selected_mains) {
        if (j < 0 || j >= registry.total_dim())
            throw contract_error("selected main slot " + std::to_string(j) + " out of registry range");
        mains.insert(gene_ids[static_cast<std::size_t>(registry.slots[static_cast<std::size_t>(j)].gene_a)]);
    }
    for (Index j : selection.selected_interactions) {
        if (j < 0 || j >= registry.total_dim())
            throw contract_error("selected interaction slot " + std::to_string(j) + " out of registry range");
        const Slot& s = registry.slots[static_cast<std::size_t>(j)];
        std::string ga = gene_ids[static_cast<std::size_t>(s.gene_a)];
        std::string gb = gene_ids[static_cast<std::size_t>(s.gene_b)];
        if (gb < ga) std::swap(ga, gb);
        pairs.emplace(std::move(ga), std::move(gb));
    }
    out.distinct_mains.assign(mains.begin(), mains.end());
    out.distinct_interactions.assign(pairs.begin(), pairs.end());
    return out;
}

}  // namespace netslab
