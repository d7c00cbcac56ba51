#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netslab/dataset.hpp"
#include "netslab/design.hpp"
#include "netslab/errors.hpp"
#include "netslab/model.hpp"
#include "netslab/simgen.hpp"

namespace netslab {

struct MetricsReport {
    double m_tp = 0, m_fp = 0;  // distinct genes
    double i_tp = 0, i_fp = 0;  // distinct unordered gene pairs
    double n_tp = 0, n_fp = 0;  // networks
    double m_rsse = 0;          // l2 error over main slots
    double i_rsse = 0;          // l2 error over interaction slots + unrepresentable truth pairs
    double pmse = 0;            // median squared prediction error on held-out data
};

inline double median(std::vector<double> v) {
    if (v.empty()) throw contract_error("median of an empty sample");
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
    double hi = v[h];
    if (v.size() % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h));
    return 0.5 * (lo + hi);
}

// Scores a de-duplicated selection against the generating truth. Counting is
// over distinct genes/pairs/networks; coefficient error is over slots, with
// truth pairs that have no slot contributing their full coefficient.
inline MetricsReport compute_metrics(const SelectionResult& sel, const GroundTruth& truth,
                                     const ColumnRegistry& registry,
                                     const std::vector<std::string>& gene_ids, const Dataset& test) {
    MetricsReport rep;

    std::set<std::string> truth_mains;
    for (const TruthMain& tm : truth.mains) truth_mains.insert(gene_ids[static_cast<std::size_t>(tm.gene)]);
    for (const std::string& g : sel.distinct_mains)
        (truth_mains.count(g) ? rep.m_tp : rep.m_fp) += 1;

    std::set<std::pair<std::string, std::string>> truth_pairs;
    for (const TruthInteraction& ti : truth.interactions) {
        std::string a = gene_ids[static_cast<std::size_t>(ti.gene_a)];
        std::string b = gene_ids[static_cast<std::size_t>(ti.gene_b)];
        if (b < a) std::swap(a, b);
        truth_pairs.emplace(std::move(a), std::move(b));
    }
    for (const auto& pr : sel.distinct_interactions)
        (truth_pairs.count(pr) ? rep.i_tp : rep.i_fp) += 1;

    std::set<std::string> truth_nets(truth.networks.begin(), truth.networks.end());
    for (const std::string& id : sel.selected_networks)
        (truth_nets.count(id) ? rep.n_tp : rep.n_fp) += 1;

    double m_sq = 0.0, i_sq = 0.0;
    for (Index j = 0; j < registry.total_dim(); ++j) {
        const double d = sel.coefficients[j] - truth.slot_coefficients[j];
        if (registry.slots[static_cast<std::size_t>(j)].kind == SlotKind::main)
            m_sq += d * d;
        else
            i_sq += d * d;
    }
    for (const TruthInteraction& ti : truth.interactions)
        if (ti.slot < 0) i_sq += ti.coef * ti.coef;
    rep.m_rsse = std::sqrt(m_sq);
    rep.i_rsse = std::sqrt(i_sq);

    ExpandedDesign test_design(registry, test);
    const Eigen::VectorXd err = test.y - test_design.predict(sel.coefficients);
    std::vector<double> sq(err.data(), err.data() + err.size());
    for (double& v : sq) v *= v;
    rep.pmse = median(std::move(sq));
    return rep;
}

struct MetricsSummary {
    MetricsReport mean;
    MetricsReport sd;
    std::size_t n_replicates = 0;
};

inline MetricsSummary aggregate_metrics(const std::vector<MetricsReport>& reps) {
    if (reps.empty()) throw input_error("no replicates to aggregate");
    constexpr std::size_t n_fields = 9;
    const auto fields = [](const MetricsReport& r) {
        return std::array<double, n_fields>{r.m_tp, r.m_fp, r.i_tp, r.i_fp, r.n_tp,
                                            r.n_fp, r.m_rsse, r.i_rsse, r.pmse};
    };
    const auto assign = [](MetricsReport& r, const std::array<double, n_fields>& v) {
        r.m_tp = v[0]; r.m_fp = v[1]; r.i_tp = v[2]; r.i_fp = v[3]; r.n_tp = v[4];
        r.n_fp = v[5]; r.m_rsse = v[6]; r.i_rsse = v[7]; r.pmse = v[8];
    };

    std::array<double, n_fields> mean{}, ssq{};
    for (const MetricsReport& r : reps) {
        const auto v = fields(r);
        for (std::size_t f = 0; f < n_fields; ++f) mean[f] += v[f];
    }
    for (std::size_t f = 0; f < n_fields; ++f) mean[f] /= static_cast<double>(reps.size());
    for (const MetricsReport& r : reps) {
        const auto v = fields(r);
        for (std::size_t f = 0; f < n_fields; ++f) ssq[f] += (v[f] - mean[f]) * (v[f] - mean[f]);
    }
    std::array<double, n_fields> sd{};
    if (reps.size() > 1)
        for (std::size_t f = 0; f < n_fields; ++f)
            sd[f] = std::sqrt(ssq[f] / static_cast<double>(reps.size() - 1));

    MetricsSummary out;
    out.n_replicates = reps.size();
    assign(out.mean, mean);
    assign(out.sd, sd);
    return out;
}

// "12.34(0.56)" in the style of the result tables.
inline std::string format_mean_sd(double mean, double sd) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f(%.2f)", mean, sd);
    return buf;
}

}  // namespace netslab
