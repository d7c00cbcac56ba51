#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "netslab/math_util.hpp"
#include "netslab/vbem.hpp"
#include "test_helpers.hpp"

using namespace netslab;
using testing::EngineFixture;
using testing::make_random_instance;

namespace {

VariationalState spiked_state(const VbEngine& engine) {
    VariationalState s = engine.initial_state();
    s.eta.setZero();
    s.r.setZero();
    return s;
}

}  // namespace

TEST_CASE("zeta update is exactly conjugate", "[vbem]") {
    auto inst = make_random_instance(1, 20, {3});
    Hyperparameters h;
    h.a = 1.5;
    h.b = 2.5;
    EngineFixture fx(inst.data, inst.networks, h);

    VariationalState s = fx.engine.initial_state();
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Index j = 0; j < s.total_dim(); ++j) s.eta[j] = unif(rng);
    fx.engine.set_state(s);

    for (Index j = 0; j < s.total_dim(); ++j) fx.engine.update_q_zeta(j);
    for (Index j = 0; j < s.total_dim(); ++j) {
        CHECK(fx.engine.state().a_tilde[j] == h.a + s.eta[j]);
        CHECK(fx.engine.state().b_tilde[j] == h.b + 1.0 - s.eta[j]);
    }
}

TEST_CASE("model parameter updates match their closed forms", "[vbem]") {
    auto inst = make_random_instance(3, 25, {3, 2}, 0.7);
    Hyperparameters h;
    EngineFixture fx(inst.data, inst.networks, h);

    VariationalState s = fx.engine.initial_state();
    std::mt19937 rng(4);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.05, 0.95);
    for (Index j = 0; j < s.total_dim(); ++j) {
        s.m[j] = gauss(rng);
        s.sigma2[j] = 0.1 + unif(rng);
    }
    for (Index k = 0; k < s.n_networks(); ++k) s.r[k] = unif(rng);
    fx.engine.set_state(s);

    const Eigen::MatrixXd& X = fx.design.materialize();
    double energy = (inst.data.y - X * s.m).squaredNorm();
    for (Index j = 0; j < s.total_dim(); ++j) energy += s.sigma2[j] * X.col(j).squaredNorm();
    const double tau_expected = static_cast<double>(inst.data.n()) / energy;
    const double theta_expected = s.r.mean();

    fx.engine.update_model_params();
    CHECK(fx.engine.state().tau == Catch::Approx(tau_expected).epsilon(1e-12));
    CHECK(fx.engine.state().theta == Catch::Approx(theta_expected).epsilon(1e-12));

    SECTION("zero residual energy hits the precision cap") {
        VariationalState z = fx.engine.initial_state();
        z.m.setZero();
        z.sigma2.setZero();
        VbEngine zero_engine(X, Eigen::VectorXd::Zero(inst.data.n()), fx.design.registry(), fx.graphs, h);
        zero_engine.set_state(z);
        zero_engine.update_model_params();
        CHECK(zero_engine.state().tau == 1e8);
    }
    SECTION("theta is clamped away from 0 and 1") {
        VariationalState z = fx.engine.initial_state();
        z.r.setZero();
        fx.engine.set_state(z);
        fx.engine.update_model_params();
        CHECK(fx.engine.state().theta == 1e-6);
    }
}

TEST_CASE("coefficient update solves the expected ridge problem", "[vbem]") {
    Hyperparameters h;  // s1 = 1, s2 = 0.01
    h.s2 = 0.01;

    SECTION("all factors at the spike: prior precision 2/s2") {
        auto inst = make_random_instance(5, 30, {2}, 1.0);
        EngineFixture fx(inst.data, inst.networks, h);
        VariationalState s = spiked_state(fx.engine);
        s.tau = 2.0;
        fx.engine.set_state(s);

        fx.engine.update_q_w(0);
        const double c0 = fx.design.column_sq_norms()[0];
        const double sigma2_expected = 1.0 / (s.tau * c0 + 2.0 / h.s2);
        const double m_expected = sigma2_expected * s.tau * fx.design.materialize().col(0).dot(inst.data.y);
        CHECK(fx.engine.state().sigma2[0] == Catch::Approx(sigma2_expected).epsilon(1e-12));
        CHECK(fx.engine.state().m[0] == Catch::Approx(m_expected).epsilon(1e-12));
    }

    SECTION("slab everywhere on an isolated gene: prior precision (2+ridge)/s1") {
        auto inst = make_random_instance(6, 30, {1});  // one-gene network, no pairs
        EngineFixture fx(inst.data, inst.networks, h);
        VariationalState s = fx.engine.initial_state();
        s.eta.setOnes();
        s.r.setOnes();
        s.tau = 3.0;
        fx.engine.set_state(s);

        fx.engine.update_q_w(0);
        const double c0 = fx.design.column_sq_norms()[0];
        const double sigma2_expected = 1.0 / (s.tau * c0 + (2.0 + h.ridge) / h.s1);
        CHECK(fx.engine.state().sigma2[0] == Catch::Approx(sigma2_expected).epsilon(1e-12));
    }

    SECTION("neighbor coupling enters through the Laplacian row") {
        auto inst = make_random_instance(7, 30, {2}, 1.0);  // two genes, one edge
        EngineFixture fx(inst.data, inst.networks, h);
        VariationalState s = fx.engine.initial_state();
        s.eta.setOnes();
        s.r.setOnes();
        s.m << 0.0, 0.8, 0.0;  // neighbor main carries mass
        s.tau = 1.0;
        fx.engine.set_state(s);

        fx.engine.update_q_w(0);
        const auto& g = fx.graphs[0];
        const double q0 = 1.0 / h.s1 + g.laplacian_ridge(0, 0) / h.s1;
        const double sigma2_expected = 1.0 / (s.tau * fx.design.column_sq_norms()[0] + q0);
        const Eigen::VectorXd resid = inst.data.y - fx.design.materialize() * s.m;
        const double lin = s.tau * fx.design.materialize().col(0).dot(resid) -
                           g.laplacian_ridge(0, 1) / h.s1 * s.m[1];
        CHECK(fx.engine.state().sigma2[0] == Catch::Approx(sigma2_expected).epsilon(1e-12));
        CHECK(fx.engine.state().m[0] == Catch::Approx(sigma2_expected * lin).epsilon(1e-10));
    }
}

TEST_CASE("inclusion probabilities clamp at the numeric limits", "[vbem]") {
    auto inst = make_random_instance(8, 20, {2}, 1.0);
    Hyperparameters h;
    h.s2 = 0.01;
    EngineFixture fx(inst.data, inst.networks, h);

    VariationalState s = fx.engine.initial_state();
    s.m[0] = 100.0;  // overwhelming slab evidence
    fx.engine.set_state(s);
    fx.engine.update_q_beta(0);
    CHECK(fx.engine.state().eta[0] == 1.0 - 1e-12);

    Hyperparameters tiny = h;
    tiny.s2 = 1e-250;  // overwhelming spike evidence for a near-zero weight
    EngineFixture fx2(inst.data, inst.networks, tiny);
    VariationalState s2 = fx2.engine.initial_state();
    s2.m.setZero();
    s2.sigma2.setConstant(1e-300);
    fx2.engine.set_state(s2);
    fx2.engine.update_q_beta(0);
    CHECK(fx2.engine.state().eta[0] == 1e-12);
}

TEST_CASE("main-effect update aggregates child interaction evidence", "[vbem]") {
    auto inst = make_random_instance(9, 40, {3}, 1.0);
    Hyperparameters h;
    h.s2 = 0.01;
    EngineFixture fx(inst.data, inst.networks, h);
    const auto& reg = fx.design.registry();

    VariationalState s = fx.engine.initial_state();
    s.m.setConstant(0.3);
    s.sigma2.setConstant(0.05);
    s.eta.setConstant(0.4);
    s.a_tilde.setConstant(1.3);
    s.b_tilde.setConstant(1.7);
    fx.engine.set_state(s);

    const auto gap = [&](double e2) {
        return 0.5 * std::log(h.s2 / h.s1) + e2 * (0.5 / h.s2 - 0.5 / h.s1);
    };
    const double e2 = 0.3 * 0.3 + 0.05;

    // slot 0 is main gene 0 of a complete 3-gene network; its interactions are
    // (0,1) and (0,2) at slots 3 and 4, with other parents at slots 1 and 2
    double logit = gap(e2) + digamma(1.3) - digamma(1.7);
    logit += s.eta[1] * gap(e2) + s.eta[2] * gap(e2);
    fx.engine.update_q_beta(0);
    CHECK(fx.engine.state().eta[0] == Catch::Approx(sigmoid(logit)).epsilon(1e-12));

    // an interaction slot takes no child terms
    double logit_int = gap(e2) + digamma(1.3) - digamma(1.7);
    fx.engine.update_q_beta(3);
    CHECK(fx.engine.state().eta[3] == Catch::Approx(sigmoid(logit_int)).epsilon(1e-12));
    REQUIRE(reg.slots[3].kind == SlotKind::interaction);
}

TEST_CASE("network update balances quadratic form against the spike", "[vbem]") {
    auto inst = make_random_instance(10, 30, {3}, 1.0);
    Hyperparameters h;
    h.s2 = 0.01;
    EngineFixture fx(inst.data, inst.networks, h);
    const auto& g = fx.graphs[0];

    VariationalState s = fx.engine.initial_state();
    std::mt19937 rng(11);
    std::normal_distribution<double> gauss(0.0, 0.5);
    for (Index j = 0; j < s.total_dim(); ++j) {
        s.m[j] = gauss(rng);
        s.sigma2[j] = 0.02 + 0.01 * static_cast<double>(j);
    }
    s.theta = 0.3;
    fx.engine.set_state(s);

    const double quad = s.m.dot(g.laplacian_ridge * s.m) + g.laplacian_ridge.diagonal().dot(s.sigma2);
    const double sum_e2 = s.m.squaredNorm() + s.sigma2.sum();
    const double logit = std::log(0.3 / 0.7) + 0.5 * g.log_det_ridge +
                         0.5 * static_cast<double>(g.dim()) * std::log(h.s2 / h.s1) -
                         quad / (2.0 * h.s1) + sum_e2 / (2.0 * h.s2);
    fx.engine.update_q_alpha(0);
    CHECK(fx.engine.state().r[0] == Catch::Approx(clamp_unit(sigmoid(logit), 1e-12)).epsilon(1e-12));
}

TEST_CASE("every coordinate update is monotone in the ELBO", "[vbem]") {
    for (unsigned seed : {21u, 22u, 23u}) {
        auto inst = make_random_instance(seed, 30, {3, 2}, 0.6, 2.0, 2, 1.0);
        Hyperparameters h;
        h.s2 = 1e-3;
        EngineFixture fx(inst.data, inst.networks, h);

        double before = fx.engine.compute_elbo();
        const auto expect_rise = [&](const char* what) {
            const double after = fx.engine.compute_elbo();
            INFO("seed " << seed << ", update " << what);
            REQUIRE(after >= before - 1e-8 * std::max(1.0, std::abs(before)));
            before = after;
        };

        for (int sweep = 0; sweep < 4; ++sweep) {
            for (Index j = 0; j < fx.design.total_dim(); ++j) {
                fx.engine.update_q_w(j);
                expect_rise("w");
            }
            for (Index j = 0; j < fx.design.total_dim(); ++j) {
                fx.engine.update_q_beta(j);
                expect_rise("beta");
            }
            for (Index j = 0; j < fx.design.total_dim(); ++j) {
                fx.engine.update_q_zeta(j);
                expect_rise("zeta");
            }
            for (Index k = 0; k < fx.engine.state().n_networks(); ++k) {
                fx.engine.update_q_alpha(k);
                expect_rise("alpha");
            }
            fx.engine.update_model_params();
            expect_rise("model params");
        }
    }
}

TEST_CASE("ELBO is stationary right after its coordinate update", "[vbem]") {
    auto inst = make_random_instance(31, 40, {3}, 1.0, 1.5, 1, 1.0);
    Hyperparameters h;
    h.s2 = 0.01;
    EngineFixture fx(inst.data, inst.networks, h);
    for (int sweep = 0; sweep < 3; ++sweep) fx.engine.sweep();

    SECTION("with respect to the coefficient mean") {
        for (Index j : {Index(0), Index(3)}) {
            fx.engine.update_q_w(j);
            const VariationalState base = fx.engine.state();
            const double hstep = 1e-4;
            VariationalState plus = base, minus = base;
            plus.m[j] += hstep;
            minus.m[j] -= hstep;
            fx.engine.set_state(plus);
            const double ep = fx.engine.compute_elbo();
            fx.engine.set_state(minus);
            const double em = fx.engine.compute_elbo();
            fx.engine.set_state(base);
            CHECK(std::abs(ep - em) / (2.0 * hstep) < 1e-6);
        }
    }
    SECTION("with respect to an interior inclusion probability") {
        fx.engine.update_q_beta(1);
        const VariationalState base = fx.engine.state();
        if (base.eta[1] > 1e-3 && base.eta[1] < 1.0 - 1e-3) {
            const double hstep = 1e-5;
            VariationalState plus = base, minus = base;
            plus.eta[1] += hstep;
            minus.eta[1] -= hstep;
            fx.engine.set_state(plus);
            const double ep = fx.engine.compute_elbo();
            fx.engine.set_state(minus);
            const double em = fx.engine.compute_elbo();
            fx.engine.set_state(base);
            CHECK(std::abs(ep - em) / (2.0 * hstep) < 1e-4);
        }
    }
}

TEST_CASE("fit runs are deterministic", "[vbem]") {
    auto inst = make_random_instance(41, 50, {3, 2}, 0.5, 2.0, 2, 1.0);
    Hyperparameters h;
    h.s2 = 0.005;
    const FitResult a = fit(inst.data, inst.networks, h);
    const FitResult b = fit(inst.data, inst.networks, h);
    REQUIRE(a.state.elbo_trace.size() == b.state.elbo_trace.size());
    for (std::size_t i = 0; i < a.state.elbo_trace.size(); ++i)
        CHECK(a.state.elbo_trace[i] == b.state.elbo_trace[i]);
    CHECK(a.selection.selected_mains == b.selection.selected_mains);
    CHECK((a.state.m - b.state.m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pure noise selects nothing", "[vbem]") {
    auto inst = make_random_instance(51, 100, {4}, 0.5);
    Hyperparameters h;
    h.s2 = 0.01;
    const FitResult res = fit(inst.data, inst.networks, h);
    CHECK(res.converged);
    CHECK(res.selection.selected_mains.empty());
    CHECK(res.selection.selected_interactions.empty());
}

TEST_CASE("one strong main effect is recovered", "[vbem]") {
    auto inst = make_random_instance(61, 150, {4}, 0.5, 5.0, 1, 0.5);
    Hyperparameters h;
    const FitResult res = fit(inst.data, inst.networks, h);
    CHECK(res.converged);
    REQUIRE(res.selection.selected_mains == std::vector<Index>{0});
    CHECK(res.state.eta[0] > 0.99);
    CHECK(res.state.m[0] == Catch::Approx(5.0).margin(0.3));
    CHECK(res.selection.selected_interactions.empty());
}

TEST_CASE("fit bookkeeping: trace, convergence flag, fixed model parameters", "[vbem]") {
    auto inst = make_random_instance(71, 60, {3}, 0.8, 2.0, 1, 1.0);
    Hyperparameters h;
    h.s2 = 0.01;

    const FitResult res = fit(inst.data, inst.networks, h);
    REQUIRE(res.converged);
    CHECK(res.n_sweeps == static_cast<int>(res.state.elbo_trace.size()));
    for (std::size_t i = 1; i < res.state.elbo_trace.size(); ++i)
        CHECK(res.state.elbo_trace[i] >=
              res.state.elbo_trace[i - 1] - 1e-8 * std::abs(res.state.elbo_trace[i - 1]));

    FitOptions fixed;
    fixed.update_model_params = false;
    const FitResult res2 = fit(inst.data, inst.networks, h, fixed);
    CHECK(res2.state.tau == fixed.tau_cap);  // stays at the saturated start
    CHECK(res2.state.theta == 0.5);

    FitOptions capped;
    capped.max_iter = 1;
    const FitResult res3 = fit(inst.data, inst.networks, h, capped);
    CHECK_FALSE(res3.converged);
    CHECK(res3.n_sweeps == 1);
}

TEST_CASE("non-finite states are reported with the offending term", "[vbem]") {
    auto inst = make_random_instance(81, 20, {2}, 1.0);
    Hyperparameters h;
    EngineFixture fx(inst.data, inst.networks, h);
    VariationalState s = fx.engine.initial_state();
    s.tau = 0.0;  // log tau -> -inf
    fx.engine.set_state(s);
    CHECK_THROWS_WITH(fx.engine.compute_elbo(), Catch::Matchers::ContainsSubstring("likelihood"));
}

TEST_CASE("engine construction validates shapes", "[vbem]") {
    auto inst = make_random_instance(91, 15, {2, 2}, 1.0);
    Hyperparameters h;
    auto registry = build_registry(inst.networks, inst.data);
    auto graphs = build_penalty_graphs(inst.networks, h.ridge);
    ExpandedDesign design(registry, inst.data);
    const Eigen::MatrixXd& X = design.materialize();

    std::vector<PenaltyGraph> missing(graphs.begin(), graphs.begin() + 1);
    CHECK_THROWS_AS(VbEngine(X, inst.data.y, registry, missing, h), contract_error);
    Eigen::VectorXd short_y = inst.data.y.head(10);
    CHECK_THROWS_AS(VbEngine(X, short_y, registry, graphs, h), contract_error);
}
