#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netslab/dataset.hpp"
#include "netslab/errors.hpp"
#include "netslab/gene_network.hpp"

namespace netslab {

enum class SlotKind { main, interaction };

// One coefficient slot: a (network, main-or-pair) coordinate resolved to
// dataset columns. A gene appearing in several networks owns one slot each.
struct Slot {
    Index network = 0;    // index into the network list
    SlotKind kind = SlotKind::main;
    Index local_a = 0;    // node index within the network
    Index local_b = -1;   // second node for interactions, -1 for mains
    Index gene_a = 0;     // dataset column of the (first) gene
    Index gene_b = -1;    // dataset column of the second gene, -1 for mains
};

struct ColumnRegistry {
    std::vector<std::string> network_ids;
    std::vector<Slot> slots;         // mains first, then canonical pairs, per network
    std::vector<Index> offsets;      // first slot of each network
    std::vector<Index> block_sizes;  // p_k(p_k+1)/2 per network

    Index total_dim() const { return static_cast<Index>(slots.size()); }
    Index n_networks() const { return static_cast<Index>(network_ids.size()); }

    Index network_of(Index slot) const { return slots[static_cast<std::size_t>(slot)].network; }
    // Position of a slot inside its network's Laplacian block.
    Index local_index(Index slot) const { return slot - offsets[static_cast<std::size_t>(network_of(slot))]; }
};

inline ColumnRegistry build_registry(const std::vector<GeneNetwork>& networks, const Dataset& dataset) {
    std::unordered_map<std::string, Index> col_of;
    for (Index j = 0; j < dataset.n_genes(); ++j) col_of.emplace(dataset.gene_ids[static_cast<std::size_t>(j)], j);

    ColumnRegistry reg;
    for (std::size_t k = 0; k < networks.size(); ++k) {
        const GeneNetwork& net = networks[k];
        reg.network_ids.push_back(net.id);
        reg.offsets.push_back(reg.total_dim());

        std::vector<Index> cols(static_cast<std::size_t>(net.size()));
        for (Index i = 0; i < net.size(); ++i) {
            auto it = col_of.find(net.nodes[static_cast<std::size_t>(i)]);
            if (it == col_of.end())
                throw input_error("network '" + net.id + "' node '" + net.nodes[static_cast<std::size_t>(i)] +
                                  "' not found among dataset genes");
            cols[static_cast<std::size_t>(i)] = it->second;
        }
        for (Index i = 0; i < net.size(); ++i)
            reg.slots.push_back({static_cast<Index>(k), SlotKind::main, i, -1, cols[static_cast<std::size_t>(i)], -1});
        for (const NodePair& pr : canonical_pairs(net.size()))
            reg.slots.push_back({static_cast<Index>(k), SlotKind::interaction, pr.first, pr.second,
                                 cols[static_cast<std::size_t>(pr.first)], cols[static_cast<std::size_t>(pr.second)]});
        reg.block_sizes.push_back(reg.total_dim() - reg.offsets.back());
    }
    return reg;
}

// The n x P expanded matrix, exposed column-by-column. Interaction columns
// are element-wise products of the two (optionally standardized) gene columns.
class ExpandedDesign {
public:
    ExpandedDesign(ColumnRegistry registry, const Dataset& dataset, bool standardize = false)
        : reg_(std::move(registry)), X_(dataset.X) {
        if (standardize) {
            means_ = X_.colwise().mean();
            const Index n = X_.rows();
            for (Index j = 0; j < X_.cols(); ++j) {
                const double sd = std::sqrt((X_.col(j).array() - means_[j]).square().sum() /
                                            static_cast<double>(n - 1));
                if (!(sd > 0.0))
                    throw input_error("cannot standardize constant gene column '" +
                                      dataset.gene_ids[static_cast<std::size_t>(j)] + "'");
                X_.col(j) = (X_.col(j).array() - means_[j]) / sd;
                scales_.conservativeResize(j + 1);
                scales_[j] = sd;
            }
        }
        sq_norms_.resize(reg_.total_dim());
        for (Index j = 0; j < reg_.total_dim(); ++j) sq_norms_[j] = column(j).squaredNorm();
    }

    const ColumnRegistry& registry() const { return reg_; }
    Index n() const { return X_.rows(); }
    Index total_dim() const { return reg_.total_dim(); }
    const Eigen::VectorXd& column_sq_norms() const { return sq_norms_; }
    bool standardized() const { return means_.size() > 0; }
    const Eigen::VectorXd& means() const { return means_; }
    const Eigen::VectorXd& scales() const { return scales_; }

    Eigen::VectorXd column(Index slot) const {
        const Slot& s = slot_at(slot);
        if (s.kind == SlotKind::main) return X_.col(s.gene_a);
        return X_.col(s.gene_a).cwiseProduct(X_.col(s.gene_b));
    }

    Eigen::VectorXd interaction_column(Index slot) const {
        const Slot& s = slot_at(slot);
        if (s.kind != SlotKind::interaction)
            throw contract_error("slot " + std::to_string(slot) + " is a main-effect slot");
        return X_.col(s.gene_a).cwiseProduct(X_.col(s.gene_b));
    }

    // Builds and caches the full matrix; call once before hot loops.
    const Eigen::MatrixXd& materialize() {
        if (!cache_) {
            Eigen::MatrixXd m(n(), total_dim());
            for (Index j = 0; j < total_dim(); ++j) m.col(j) = column(j);
            cache_ = std::move(m);
        }
        return *cache_;
    }

    // X~ w for a full-length coefficient vector, skipping zero entries.
    Eigen::VectorXd predict(const Eigen::VectorXd& w) const {
        if (w.size() != total_dim())
            throw contract_error("coefficient vector length " + std::to_string(w.size()) +
                                 " does not match design dimension " + std::to_string(total_dim()));
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n());
        for (Index j = 0; j < total_dim(); ++j)
            if (w[j] != 0.0) out += w[j] * column(j);
        return out;
    }

private:
    const Slot& slot_at(Index slot) const {
        if (slot < 0 || slot >= total_dim())
            throw contract_error("slot index " + std::to_string(slot) + " out of range");
        return reg_.slots[static_cast<std::size_t>(slot)];
    }

    ColumnRegistry reg_;
    Eigen::MatrixXd X_;
    Eigen::VectorXd means_, scales_;
    Eigen::VectorXd sq_norms_;
    std::optional<Eigen::MatrixXd> cache_;
};

}  // namespace netslab
