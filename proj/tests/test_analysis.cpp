#include "doctest.h"

#include <cmath>
#include <random>

#include "nlch/analysis.hpp"

using namespace nlch;

namespace {

SimConfig small_base() {
    SimConfig cfg;
    cfg.n = 97;
    cfg.T = 1e-2;
    cfg.dt = 1e-4;
    return cfg;
}

Field random_field(const DomainPtr& d, unsigned seed) {
    std::mt19937_64 rng(seed);
    Field f = Field::zeros(d);
    for (auto& x : f.v) x = 2.0 * (double(rng() >> 11) * 0x1.0p-53) - 1.0;
    return f;
}

} // namespace

TEST_CASE("energy of simple states") {
    SimConfig cfg = small_base();
    cfg.eps = 0.0;
    SimContext ctx = make_context(cfg);

    // phi == 1: nonlocal term cancels exactly, G(1) = -1 over both rays
    Field one = Field::constant(ctx.dom, 1.0);
    CHECK(energy(ctx, one) == doctest::Approx(-2.0 * cfg.L).epsilon(1e-12));

    Field zero = Field::zeros(ctx.dom);
    CHECK(energy(ctx, zero) == 0.0);
}

TEST_CASE("double-quadrature form matches the a_quad form") {
    SimConfig cfg = small_base();
    cfg.n = 128;
    SimContext ctx = make_context(cfg);
    for (unsigned seed = 0; seed < 5; ++seed) {
        Field u = random_field(ctx.dom, seed);
        const double e1 = energy(ctx, u);
        const double e2 = energy_pair_form(ctx, u);
        CHECK(e1 == doctest::Approx(e2).epsilon(1e-10));

        const double r1 = energy(ctx, u, 1e-2);
        const double r2 = energy_pair_form(ctx, u, 1e-2);
        CHECK(r1 == doctest::Approx(r2).epsilon(1e-10));
    }
}

TEST_CASE("energy balance on the exact steady state is zero") {
    SimConfig cfg = small_base();
    cfg.eps = 0.0;
    cfg.scheme = Scheme::SemiImplicit;
    cfg.ic.kind = InitialKind::Constant;
    cfg.ic.amplitude = 1.0;
    cfg.T = 0.01;
    cfg.dt = 1e-4;
    Trajectory tr = solve(cfg);
    EnergyReport rep = energy_balance(tr);
    CHECK(rep.residual.front() == 0.0);
    CHECK(rep.max_abs_residual <= 1e-12);
    CHECK(rep.max_step_increase <= 0.0);
}

TEST_CASE("tanh front on (P): energy decreases, residual at first order") {
    SimConfig cfg = small_base();
    cfg.eps = 0.0;
    cfg.scheme = Scheme::SemiImplicit;
    cfg.ic.kind = InitialKind::TanhFront;
    cfg.T = 2e-2;
    SimContext ctx = make_context(cfg);

    double resid[2];
    int idx = 0;
    for (double dt : {2e-4, 1e-4}) {
        SimConfig c = cfg;
        c.dt = dt;
        Trajectory tr = solve(c, ctx);
        EnergyReport rep = energy_balance(tr);
        CHECK(rep.max_step_increase <= 1e-10 * std::fabs(rep.energy.front()));
        resid[idx++] = rep.max_abs_residual;
    }
    CHECK(std::log2(resid[0] / resid[1]) >= 0.9);
}

TEST_CASE("(P)_eps RK4: Lyapunov functional decreases, residual at RK4 order") {
    SimConfig cfg = small_base();
    cfg.n = 257;
    cfg.eps = 1e-2;
    cfg.scheme = Scheme::Rk4;
    cfg.ic.kind = InitialKind::TanhFront;
    cfg.T = 4.8e-2;
    SimContext ctx = make_context(cfg);

    double resid[3];
    int idx = 0;
    for (double dt : {1.2e-4, 6e-5, 3e-5}) {
        SimConfig c = cfg;
        c.dt = dt;
        Trajectory tr = solve(c, ctx);
        EnergyReport rep = energy_balance(tr);
        CHECK(rep.max_step_increase <= 1e-10 * std::fabs(rep.energy.front()));
        resid[idx++] = rep.max_abs_residual;
    }
    const double order = std::log2(resid[0] / resid[2]) / 2.0;
    CHECK(order >= 3.5);
}

TEST_CASE("discrete chain rule: dE/dt tracks -||mu||_V^2 on (P)") {
    SimConfig cfg = small_base();
    cfg.eps = 0.0;
    cfg.scheme = Scheme::SemiImplicit;
    cfg.ic.kind = InitialKind::TanhFront;
    cfg.T = 5e-3;
    SimContext ctx = make_context(cfg);

    auto chain_err = [&](double dt) {
        SimConfig c = cfg;
        c.dt = dt;
        Trajectory tr = solve(c, ctx);
        double worst = 0.0;
        for (size_t k = 1; k + 1 < tr.energy.size(); ++k) {
            const double dE = (tr.energy[k + 1] - tr.energy[k - 1]) / (2.0 * tr.dt);
            worst = std::max(worst, std::fabs(dE + tr.norm_mu_V2[k]));
        }
        return worst;
    };
    const double e1 = chain_err(2e-4), e2 = chain_err(1e-4);
    CHECK(e2 < e1 * 0.65);
}

TEST_CASE("assumption validation on the benchmark preset") {
    SimConfig cfg; // defaults are the preset
    auto dom = make_domain(cfg.eta, cfg.L, cfg.n);
    Field phi0 = raw_initial_field(cfg, dom);
    AssumptionReport rep =
        validate_assumptions(KernelSpec{cfg.c_J}, quartic_potential(), dom, phi0);

    CHECK(std::fabs(rep.j_l1 - 21.0) <= 1e-9);
    CHECK(rep.min_a_closed >= 20.0);
    CHECK(rep.j_l1 < rep.c0 + rep.c1);
    CHECK(rep.pass());
    CHECK(std::isfinite(rep.c2));
    CHECK(rep.mollifier_vstar_ratio_max <= rep.c3 * (1.0 + 1e-12));

    // eta = 0.5 breaks the second (A7) inequality; reported, not thrown
    auto dom5 = make_domain(0.5, cfg.L, cfg.n);
    AssumptionReport bad =
        validate_assumptions(KernelSpec{cfg.c_J}, quartic_potential(), dom5,
                             raw_initial_field(cfg, dom5));
    CHECK_FALSE(bad.a7_inf_a);
    CHECK_FALSE(bad.pass());

    // doubled amplitude breaks the mass inequality: 42 >= 22
    AssumptionReport heavy =
        validate_assumptions(KernelSpec{2.0 * cfg.c_J}, quartic_potential(), dom, phi0);
    CHECK_FALSE(heavy.a7_mass);
}

TEST_CASE("degenerate eps sweep is flagged") {
    SimConfig cfg = small_base();
    cfg.n = 65;
    cfg.eps = 1e-2;
    cfg.T = 4e-4;
    cfg.dt = 2e-5;
    ConvergenceReport rep = converge_eps(cfg, {1e-2, 1e-2, 1e-2}, EpsReference::SmallestEps, 4);
    CHECK(rep.flagged_degenerate);
    CHECK_FALSE(rep.fit_valid);
    for (const auto& pt : rep.points) CHECK(pt.total == 0.0); // identical runs
}

TEST_CASE("eps sweep against the direct limit run fits order >= 0.4") {
    SimConfig cfg = small_base();
    cfg.n = 65;
    cfg.T = 2e-2;
    cfg.dt = 1e-4;
    cfg.ic.kind = InitialKind::TanhFront;
    ConvergenceReport rep =
        converge_eps(cfg, {1e-1, 3e-2, 1e-2, 3e-3}, EpsReference::DirectP, 10, 2);
    REQUIRE(rep.fit_valid);
    CHECK(rep.fitted_p >= 0.4);
    CHECK(rep.monotone);
    for (const auto& pt : rep.points)
        CHECK(pt.total <= rep.cover_C * std::sqrt(pt.param) * (1.0 + 1e-12));

    // cross-check with the smallest-eps reference
    ConvergenceReport rep2 =
        converge_eps(cfg, {1e-1, 3e-2, 1e-2, 3e-3}, EpsReference::SmallestEps, 10, 2);
    REQUIRE(rep2.fit_valid);
    CHECK(rep2.fitted_p >= 0.4);
}

TEST_CASE("lambda sweep: errors strictly decreasing, scaled mu-dissipation recorded") {
    SimConfig cfg = small_base();
    cfg.n = 65;
    cfg.eps = 0.1;
    cfg.T = 2e-4;
    cfg.dt = 1e-5;
    cfg.ic.kind = InitialKind::TanhFront;
    ConvergenceReport rep = converge_lambda(cfg, {1e-1, 1e-2, 1e-3}, 10, 2);
    REQUIRE(rep.points.size() == 3);
    for (size_t i = 1; i < rep.points.size(); ++i)
        CHECK(rep.points[i].total < rep.points[i - 1].total);
    for (const auto& pt : rep.points) CHECK(std::isfinite(pt.lambda2_int_dtmu2));

    ConvergenceReport single = converge_lambda(cfg, {1e-2}, 10);
    CHECK(single.flagged_degenerate);
    CHECK_FALSE(single.fit_valid);
}

TEST_CASE("cauchy table: diagonal vanishes, one constant covers all pairs") {
    SimConfig cfg = small_base();
    cfg.n = 65;
    cfg.T = 2e-3;
    cfg.dt = 5e-5;
    cfg.ic.kind = InitialKind::TanhFront;

    ConvergenceReport diag = cauchy_table(cfg, {1e-2, 1e-2}, 5);
    REQUIRE(diag.pairs.size() == 1);
    CHECK(diag.pairs[0].d <= 1e-28); // identical eps, identical runs

    ConvergenceReport rep = cauchy_table(cfg, {1e-1, 3e-2, 1e-2}, 5, 2);
    REQUIRE(rep.pairs.size() == 3);
    CHECK(rep.cauchy_C > 0.0);
    CHECK(std::isfinite(rep.cauchy_C));
    for (const auto& pr : rep.pairs)
        CHECK(pr.d <= rep.cauchy_C * pr.denom * (1.0 + 1e-12));
}

TEST_CASE("log-log fit recovers a synthetic power law") {
    std::vector<double> ps = {1e-1, 3e-2, 1e-2, 3e-3};
    std::vector<double> es;
    for (double p : ps) es.push_back(2.5 * std::pow(p, 1.7));
    auto [order, c] = fit_loglog(ps, es);
    CHECK(order == doctest::Approx(1.7).epsilon(1e-10));
    CHECK(c == doctest::Approx(2.5).epsilon(1e-10));
}
