#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netslab/design.hpp"
#include "netslab/errors.hpp"
#include "netslab/math_util.hpp"
#include "netslab/model.hpp"
#include "netslab/penalty_graph.hpp"

namespace netslab {

// Exact posterior over all (beta, alpha) configurations for tiny problems,
// with w and zeta integrated out in closed form. Config c encodes beta_j in
// bit j and alpha_k in bit P + k.
struct OracleResult {
    Index total_dim = 0;
    Index n_networks = 0;
    std::vector<double> log_posterior;  // normalized, indexed by config
    Eigen::VectorXd slot_inclusion;     // P(beta_j = 1 | y)
    Eigen::VectorXd network_inclusion;  // P(alpha_k = 1 | y)
    double log_marginal_likelihood = 0.0;
    std::uint32_t map_config = 0;

    bool beta_bit(std::uint32_t config, Index j) const { return (config >> j) & 1u; }
    bool alpha_bit(std::uint32_t config, Index k) const { return (config >> (total_dim + k)) & 1u; }
};

namespace detail {

inline std::vector<Index> hierarchy_parent_a(const ColumnRegistry& reg) {
    std::vector<Index> out(static_cast<std::size_t>(reg.total_dim()), -1);
    for (Index j = 0; j < reg.total_dim(); ++j) {
        const Slot& s = reg.slots[static_cast<std::size_t>(j)];
        if (s.kind == SlotKind::interaction)
            out[static_cast<std::size_t>(j)] = reg.offsets[static_cast<std::size_t>(s.network)] + s.local_a;
    }
    return out;
}

inline std::vector<Index> hierarchy_parent_b(const ColumnRegistry& reg) {
    std::vector<Index> out(static_cast<std::size_t>(reg.total_dim()), -1);
    for (Index j = 0; j < reg.total_dim(); ++j) {
        const Slot& s = reg.slots[static_cast<std::size_t>(j)];
        if (s.kind == SlotKind::interaction)
            out[static_cast<std::size_t>(j)] = reg.offsets[static_cast<std::size_t>(s.network)] + s.local_b;
    }
    return out;
}

}  // namespace detail

inline OracleResult enumerate_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        const ColumnRegistry& reg,
                                        const std::vector<PenaltyGraph>& graphs,
                                        const Hyperparameters& hyper, double tau, double theta) {
    const Index P = reg.total_dim();
    const Index K = reg.n_networks();
    if (P + K > 16)
        throw input_error("exact enumeration limited to total_dim + n_networks <= 16, got " +
                          std::to_string(P + K));
    if (X.cols() != P || X.rows() != y.size()) throw contract_error("design shape mismatch in enumeration");
    if (!(tau > 0.0) || !(theta > 0.0) || !(theta < 1.0))
        throw input_error("enumeration needs tau > 0 and theta in (0, 1)");

    const auto parent_a = detail::hierarchy_parent_a(reg);
    const auto parent_b = detail::hierarchy_parent_b(reg);

    const Eigen::MatrixXd XtX = X.transpose() * X;
    const Eigen::VectorXd Xty = X.transpose() * y;
    const double yty = y.squaredNorm();
    const double n = static_cast<double>(y.size());
    const double log_lik_const = 0.5 * n * (std::log(tau) - std::log(2.0 * M_PI)) - 0.5 * tau * yty;

    const std::uint32_t n_configs = 1u << (P + K);
    std::vector<double> log_mass(n_configs);

    for (std::uint32_t c = 0; c < n_configs; ++c) {
        Eigen::MatrixXd Q = tau * XtX;
        double log_c = 0.0;

        for (Index j = 0; j < P; ++j) {
            const double s_own = ((c >> j) & 1u) ? hyper.s1 : hyper.s2;
            Q(j, j) += 1.0 / s_own;
            log_c -= 0.5 * std::log(2.0 * M_PI * s_own);
            if (parent_a[static_cast<std::size_t>(j)] >= 0) {
                const bool both = ((c >> parent_a[static_cast<std::size_t>(j)]) & 1u) &&
                                  ((c >> parent_b[static_cast<std::size_t>(j)]) & 1u);
                const double s_hier = both ? hyper.s1 : hyper.s2;
                Q(j, j) += 1.0 / s_hier;
                log_c -= 0.5 * std::log(2.0 * M_PI * s_hier);
            }
        }

        double log_bz = 0.0;
        for (Index j = 0; j < P; ++j) {
            const bool bj = (c >> j) & 1u;
            log_bz += log_beta(hyper.a + (bj ? 1.0 : 0.0), hyper.b + (bj ? 0.0 : 1.0)) -
                      log_beta(hyper.a, hyper.b);
        }

        double log_al = 0.0;
        for (Index k = 0; k < K; ++k) {
            const PenaltyGraph& g = graphs[static_cast<std::size_t>(k)];
            const Index off = reg.offsets[static_cast<std::size_t>(k)];
            const double dim = static_cast<double>(g.dim());
            if ((c >> (P + k)) & 1u) {
                Q.block(off, off, g.dim(), g.dim()) += g.laplacian_ridge / hyper.s1;
                log_c += -0.5 * dim * std::log(2.0 * M_PI * hyper.s1) + 0.5 * g.log_det_ridge;
                log_al += std::log(theta);
            } else {
                Q.block(off, off, g.dim(), g.dim()) +=
                    Eigen::MatrixXd::Identity(g.dim(), g.dim()) / hyper.s2;
                log_c += -0.5 * dim * std::log(2.0 * M_PI * hyper.s2);
                log_al += std::log1p(-theta);
            }
        }

        Eigen::LLT<Eigen::MatrixXd> llt(Q);
        if (llt.info() != Eigen::Success)
            throw numerical_error("posterior precision not positive definite in enumeration");
        const double log_det_q = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        const Eigen::VectorXd b = tau * Xty;
        const double quad = b.dot(llt.solve(b));

        log_mass[c] = log_lik_const + log_c + 0.5 * static_cast<double>(P) * std::log(2.0 * M_PI) -
                      0.5 * log_det_q + 0.5 * quad + log_bz + log_al;
    }

    OracleResult out;
    out.total_dim = P;
    out.n_networks = K;
    out.log_marginal_likelihood = log_sum_exp(log_mass);
    out.log_posterior.resize(n_configs);
    out.slot_inclusion = Eigen::VectorXd::Zero(P);
    out.network_inclusion = Eigen::VectorXd::Zero(K);
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint32_t c = 0; c < n_configs; ++c) {
        out.log_posterior[c] = log_mass[c] - out.log_marginal_likelihood;
        const double p = std::exp(out.log_posterior[c]);
        for (Index j = 0; j < P; ++j)
            if ((c >> j) & 1u) out.slot_inclusion[j] += p;
        for (Index k = 0; k < K; ++k)
            if ((c >> (P + k)) & 1u) out.network_inclusion[k] += p;
        if (out.log_posterior[c] > best) {
            best = out.log_posterior[c];
            out.map_config = c;
        }
    }
    return out;
}

// Joint log density at a single point of (w, beta, zeta, alpha); nothing is
// integrated out. Written from the generative factorization, independently of
// the variational decomposition it cross-checks.
inline double log_joint_point(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const ColumnRegistry& reg, const std::vector<PenaltyGraph>& graphs,
                              const Hyperparameters& hyper, const Eigen::VectorXd& w,
                              const std::vector<int>& beta, const Eigen::VectorXd& zeta,
                              const std::vector<int>& alpha, double tau, double theta) {
    const Index P = reg.total_dim();
    if (w.size() != P || static_cast<Index>(beta.size()) != P || zeta.size() != P ||
        static_cast<Index>(alpha.size()) != reg.n_networks())
        throw contract_error("point evaluation arguments disagree with registry shape");

    const auto parent_a = detail::hierarchy_parent_a(reg);
    const auto parent_b = detail::hierarchy_parent_b(reg);
    const auto log_normal = [](double x, double var) {
        return -0.5 * std::log(2.0 * M_PI * var) - x * x / (2.0 * var);
    };

    const Eigen::VectorXd resid = y - X * w;
    double total = 0.5 * static_cast<double>(y.size()) * (std::log(tau) - std::log(2.0 * M_PI)) -
                   0.5 * tau * resid.squaredNorm();

    for (Index j = 0; j < P; ++j) {
        total += log_normal(w[j], beta[static_cast<std::size_t>(j)] ? hyper.s1 : hyper.s2);
        if (parent_a[static_cast<std::size_t>(j)] >= 0) {
            const bool both = beta[static_cast<std::size_t>(parent_a[static_cast<std::size_t>(j)])] &&
                              beta[static_cast<std::size_t>(parent_b[static_cast<std::size_t>(j)])];
            total += log_normal(w[j], both ? hyper.s1 : hyper.s2);
        }
        const double z = zeta[j];
        total += beta[static_cast<std::size_t>(j)] ? std::log(z) : std::log1p(-z);
        total += (hyper.a - 1.0) * std::log(z) + (hyper.b - 1.0) * std::log1p(-z) -
                 log_beta(hyper.a, hyper.b);
    }

    for (Index k = 0; k < reg.n_networks(); ++k) {
        const PenaltyGraph& g = graphs[static_cast<std::size_t>(k)];
        const Index off = reg.offsets[static_cast<std::size_t>(k)];
        const auto wk = w.segment(off, g.dim());
        const double dim = static_cast<double>(g.dim());
        if (alpha[static_cast<std::size_t>(k)]) {
            total += -0.5 * dim * std::log(2.0 * M_PI * hyper.s1) + 0.5 * g.log_det_ridge -
                     wk.dot(g.laplacian_ridge * wk) / (2.0 * hyper.s1);
            total += std::log(theta);
        } else {
            total += -0.5 * dim * std::log(2.0 * M_PI * hyper.s2) - wk.squaredNorm() / (2.0 * hyper.s2);
            total += std::log1p(-theta);
        }
    }
    return total;
}

}  // namespace netslab
