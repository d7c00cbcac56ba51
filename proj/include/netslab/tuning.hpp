#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netslab/design.hpp"
#include "netslab/errors.hpp"
#include "netslab/model.hpp"
#include "netslab/penalty_graph.hpp"
#include "netslab/vbem.hpp"

namespace netslab {

inline double bic_score(Index n, double rss, Index df) {
    if (n < 1) throw contract_error("BIC needs at least one observation");
    const double rss_floored = std::max(rss, 1e-12);
    const double nn = static_cast<double>(n);
    return nn * std::log(rss_floored / nn) + static_cast<double>(df) * std::log(nn);
}

// Default spike-variance grid: log-spaced multiples of the slab variance,
// returned in decreasing order.
inline std::vector<double> default_s2_grid(double s1, int n_points = 8, double lo_factor = 1e-4,
                                           double hi_factor = 1e-1) {
    if (n_points < 1 || !(s1 > 0.0) || !(lo_factor > 0.0) || !(hi_factor >= lo_factor))
        throw input_error("invalid spike-variance grid request");
    std::vector<double> grid(static_cast<std::size_t>(n_points));
    const double log_lo = std::log(lo_factor), log_hi = std::log(hi_factor);
    for (int i = 0; i < n_points; ++i) {
        const double t = n_points == 1 ? 0.0 : static_cast<double>(i) / (n_points - 1);
        grid[static_cast<std::size_t>(i)] = s1 * std::exp(log_hi + t * (log_lo - log_hi));
    }
    return grid;
}

struct GridPoint {
    double s2 = 0.0;
    double bic = 0.0;
    double rss = 0.0;
    Index df = 0;
    Index n_mains = 0;
    Index n_interactions = 0;
    Index n_networks = 0;
    bool converged = false;
};

struct TuningResult {
    std::vector<GridPoint> grid;  // decreasing s2
    std::size_t best_index = 0;
    Hyperparameters best_hyper;
    FitResult best_fit;
    bool all_converged = true;
};

// Fits every grid value independently and picks the BIC minimizer; ties
// resolve to the smaller spike variance. The grid is canonicalized (sorted
// decreasing, de-duplicated) first, so supplying it in a different order
// changes nothing. Registry, penalty graphs and the materialized design are
// shared across the fits.
inline TuningResult tune_s2(ExpandedDesign& design, const Eigen::VectorXd& y,
                            const std::vector<std::string>& gene_ids,
                            const std::vector<PenaltyGraph>& graphs, Hyperparameters hyper,
                            std::vector<double> s2_grid, const FitOptions& options = {}) {
    if (s2_grid.empty()) throw input_error("spike-variance grid is empty");
    std::sort(s2_grid.begin(), s2_grid.end(), std::greater<>());
    s2_grid.erase(std::unique(s2_grid.begin(), s2_grid.end()), s2_grid.end());
    for (double v : s2_grid)
        if (!(v > 0.0) || !(v < hyper.s1))
            throw input_error("grid value " + std::to_string(v) + " outside (0, s1)");

    TuningResult out;
    out.grid.reserve(s2_grid.size());
    double best_bic = std::numeric_limits<double>::infinity();
    const Index n = y.size();

    for (std::size_t i = 0; i < s2_grid.size(); ++i) {
        Hyperparameters h = hyper;
        h.s2 = s2_grid[i];
        FitResult fr = fit_design(design, y, gene_ids, graphs, h, options);
        const SelectionResult& sel = fr.selection;

        GridPoint gp;
        gp.s2 = h.s2;
        gp.df = static_cast<Index>(sel.selected_mains.size() + sel.selected_interactions.size());
        gp.rss = (y - design.predict(sel.coefficients)).squaredNorm();
        gp.bic = bic_score(n, gp.rss, gp.df);
        gp.n_mains = static_cast<Index>(sel.selected_mains.size());
        gp.n_interactions = static_cast<Index>(sel.selected_interactions.size());
        gp.n_networks = static_cast<Index>(sel.selected_networks.size());
        gp.converged = fr.converged;
        out.grid.push_back(gp);
        out.all_converged = out.all_converged && fr.converged;

        // grid is decreasing, so <= hands ties to the smaller spike variance
        if (gp.bic <= best_bic) {
            best_bic = gp.bic;
            out.best_index = i;
            out.best_hyper = h;
            out.best_fit = std::move(fr);
        }
    }
    return out;
}

inline TuningResult tune_s2(const Dataset& dataset, const std::vector<GeneNetwork>& networks,
                            const Hyperparameters& hyper, const std::vector<double>& s2_grid,
                            const FitOptions& options = {}) {
    validate_dataset(dataset);
    auto registry = build_registry(networks, dataset);
    auto graphs = build_penalty_graphs(networks, hyper.ridge);
    ExpandedDesign design(std::move(registry), dataset, options.standardize);
    return tune_s2(design, dataset.y, dataset.gene_ids, graphs, hyper, s2_grid, options);
}

}  // namespace netslab
