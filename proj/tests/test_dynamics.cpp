#include "doctest.h"

#include <cmath>
#include <random>

#include "nlch/dynamics.hpp"

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

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("mollifier: constants, H-convergence, V* bound") {
    auto dom = make_domain(0.04, 12.0, 201);
    EllipticOps ops(dom);

    Field c = Field::constant(dom, 3.0);
    Field mc = mollify_initial(ops, 0.2, c);
    for (int i = 0; i < dom->n; ++i)
        CHECK(mc[i] == doctest::Approx(3.0 / 1.2).epsilon(1e-12));

    // eps -> 0 convergence in H for random data
    Field phi0 = random_field(dom, 99);
    double prev = 1e300;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        Field m = mollify_initial(ops, eps, phi0);
        const double dist = norm_H(m - phi0);
        CHECK(dist < prev);
        prev = dist;
        CHECK(norm_H(m) <= norm_H(phi0) * (1.0 + 1e-13));
    }

    // ||phi_{0eps} - phi0||_{V*} <= eps^{1/2} ||phi0||_H for 100 random data
    for (unsigned seed = 0; seed < 100; ++seed) {
        Field f = random_field(dom, 1000 + seed);
        const double h = norm_H(f);
        for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
            Field m = mollify_initial(ops, eps, f);
            CHECK(ops.norm_Vstar(m - f) <= std::sqrt(eps) * h * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("coupled system right-hand side: zero state and Lipschitz bound") {
    SimConfig cfg = small_base();
    cfg.eps = 0.1;
    cfg.lambda = 1e-2;
    cfg.scheme = Scheme::Rk4;
    SimContext ctx = make_context(cfg);
    RegularizedPotential reg(ctx.potential, cfg.eps);

    const size_t n = static_cast<size_t>(cfg.n);
    std::vector<double> zero(n, 0.0), dphi, dmu;
    rhs_P_eps_lambda(ctx, reg, *cfg.lambda, zero, zero, dphi, dmu);
    for (size_t i = 0; i < n; ++i) {
        CHECK(dphi[i] == 0.0);
        CHECK(dmu[i] == 0.0);
    }

    const double K = lipschitz_K(cfg);
    std::vector<double> d1, d2, m1, m2;
    for (unsigned seed = 0; seed < 40; ++seed) {
        Field p1 = random_field(ctx.dom, 2 * seed), m1f = random_field(ctx.dom, 2 * seed + 1);
        Field p2 = random_field(ctx.dom, 500 + 2 * seed), m2f = random_field(ctx.dom, 501 + 2 * seed);
        rhs_P_eps_lambda(ctx, reg, *cfg.lambda, p1.v, m1f.v, d1, m1);
        rhs_P_eps_lambda(ctx, reg, *cfg.lambda, p2.v, m2f.v, d2, m2);
        double num = 0.0, den = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double w = ctx.dom->weights[i];
            num += w * (std::pow(d1[i] - d2[i], 2) + std::pow(m1[i] - m2[i], 2));
            den += w * (std::pow(p1[i] - p2[i], 2) + std::pow(m1f[i] - m2f[i], 2));
        }
        CHECK(std::sqrt(num) <= K * std::sqrt(den) * (1.0 + 1e-10));
    }
}

TEST_CASE("coupled system dphi is consistent with the reduced (P)_eps flow as lambda -> 0") {
    SimConfig cfg = small_base();
    cfg.eps = 0.1;
    cfg.lambda = 1e-4;
    cfg.scheme = Scheme::Rk4;
    SimContext ctx = make_context(cfg);
    RegularizedPotential reg(ctx.potential, cfg.eps);

    // smooth state; mu on the slaved manifold mu = mu_of_phi
    Field phi = Field::zeros(ctx.dom);
    for (int i = 0; i < cfg.n; ++i)
        phi[i] = std::tanh(ctx.dom->nodes[i] - (cfg.eta + 0.5 * cfg.L));
    Field mu = mu_of_phi_P_eps(ctx, cfg.eps, phi);

    std::vector<double> dphi, dmu, Amu;
    rhs_P_eps_lambda(ctx, reg, *cfg.lambda, phi.v, mu.v, dphi, dmu);
    ctx.ops->apply_A(mu.v, Amu);
    double scale = 0.0, err = 0.0;
    for (int i = 0; i < cfg.n; ++i) {
        scale = std::max(scale, std::fabs(Amu[i]));
        err = std::max(err, std::fabs(dphi[i] + Amu[i]));
    }
    CHECK(err <= 1e-3 * scale);
}

TEST_CASE("RK4 guard: oversized dt is a configuration error naming K") {
    SimConfig cfg = small_base();
    cfg.eps = 1e-2;
    cfg.lambda = 1e-3;
    cfg.scheme = Scheme::Rk4;
    cfg.dt = 1.0e-2; // far above 2/K
    cfg.T = 1.0;
    try {
        solve(cfg);
        FAIL("expected a configuration error");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("guard") != std::string::npos);
        CHECK(msg.find("Lipschitz") != std::string::npos);
    }
}

TEST_CASE("zero initial state stays exactly zero under RK4 on (P)_{eps,lambda}") {
    SimConfig cfg = small_base();
    cfg.eps = 0.1;
    cfg.lambda = 1e-2;
    cfg.scheme = Scheme::Rk4;
    cfg.ic.kind = InitialKind::Constant;
    cfg.ic.amplitude = 0.0;
    cfg.T = 20 * 1e-5;
    cfg.dt = 1e-5;
    Trajectory tr = solve(cfg);
    for (double x : tr.phi.back()) CHECK(x == 0.0);
    for (double x : tr.mu.back()) CHECK(x == 0.0);
}

TEST_CASE("(P)_{eps,lambda} starts from mu(0) = phi(0) = phi_{0eps}") {
    SimConfig cfg = small_base();
    cfg.eps = 0.1;
    cfg.lambda = 1e-2;
    cfg.scheme = Scheme::Rk4;
    cfg.ic.kind = InitialKind::Mollified;
    cfg.ic.base = InitialKind::TanhFront;
    cfg.T = 1e-4;
    cfg.dt = 1e-5;
    SimContext ctx = make_context(cfg);
    Trajectory tr = solve(cfg, ctx);
    Field expected = initial_field(cfg, ctx);
    CHECK(tr.phi.front() == expected.v); // bitwise
    CHECK(tr.mu.front() == expected.v);
}

TEST_CASE("RK4 self-convergence of the coupled system at order 4") {
    SimConfig cfg = small_base();
    cfg.n = 65;
    cfg.eps = 0.1;
    cfg.lambda = 1e-2;
    cfg.scheme = Scheme::Rk4;
    cfg.T = 1.024e-3;
    cfg.snapshot_stride = 1 << 20; // first/last snapshots only

    std::vector<std::vector<double>> finals;
    for (int k = 0; k < 3; ++k) {
        SimConfig c = cfg;
        c.dt = 1.6e-5 / static_cast<double>(1 << k);
        finals.push_back(solve(c).phi.back());
    }
    const double e01 = max_abs_diff(finals[0], finals[1]);
    const double e12 = max_abs_diff(finals[1], finals[2]);
    CHECK(std::log2(e01 / e12) == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("mu_of_phi examples and the eliminated-form residual") {
    SimConfig cfg = small_base();
    cfg.eps = 1e-2;
    cfg.scheme = Scheme::Rk4;
    SimContext ctx = make_context(cfg);

    Field zero = Field::zeros(ctx.dom);
    Field mu0 = mu_of_phi_P_eps(ctx, cfg.eps, zero);
    for (int i = 0; i < cfg.n; ++i) CHECK(mu0[i] == 0.0);

    // phi == 1: mu is small because G'(1) = 0, and J*1 = a_quad cancels
    Field one = Field::constant(ctx.dom, 1.0);
    Field mu1 = mu_of_phi_P_eps(ctx, cfg.eps, one);
    RegularizedPotential reg(ctx.potential, cfg.eps);
    const double bound = cfg.eps + std::fabs(reg.G_eps_prime(1.0));
    for (int i = 0; i < cfg.n; ++i) CHECK(std::fabs(mu1[i]) <= bound * (1.0 + 1e-12));

    // plugging mu back into (I + eps A) mu = S reproduces the identity
    Field phi = random_field(ctx.dom, 5);
    Field mu = mu_of_phi_P_eps(ctx, cfg.eps, phi);
    std::vector<double> Amu, Aphi, Jphi;
    ctx.ops->apply_A(mu.v, Amu);
    ctx.ops->apply_A(phi.v, Aphi);
    ctx.conv->apply(phi.v, Jphi, ctx.path);
    double resid = 0.0, scale = 0.0;
    for (int i = 0; i < cfg.n; ++i) {
        const double S = cfg.eps * Aphi[i] + ctx.a[i] * phi[i] - Jphi[i] + reg.G_eps_prime(phi[i]);
        resid = std::max(resid, std::fabs(mu[i] + cfg.eps * Amu[i] - S));
        scale = std::max(scale, std::fabs(S));
    }
    CHECK(resid <= 1e-10 * scale);
}

TEST_CASE("phi == 1 is an exact steady state of the stabilized (P) scheme") {
    SimConfig cfg = small_base();
    cfg.eps = 0.0;
    cfg.scheme = Scheme::SemiImplicit;
    cfg.ic.kind = InitialKind::Constant;
    cfg.ic.amplitude = 1.0;
    cfg.T = 0.05;
    cfg.dt = 1e-4; // 500 steps
    Trajectory tr = solve(cfg);
    for (double x : tr.phi.back()) CHECK(x == 1.0); // bitwise fixed point
    for (double x : tr.mu.back()) CHECK(x == 0.0);
    CHECK(tr.residual.back() == 0.0);
}

TEST_CASE("weak-form residual probes shrink with dt on (P)") {
    SimConfig cfg = small_base();
    cfg.eps = 0.0;
    cfg.scheme = Scheme::SemiImplicit;
    cfg.ic.kind = InitialKind::TanhFront;
    cfg.T = 2e-3;
    cfg.snapshot_stride = 1;
    SimContext ctx = make_context(cfg);

    // probe set: the constant and two cosine modes
    std::vector<Field> probes;
    probes.push_back(Field::constant(ctx.dom, 1.0));
    for (int k : {1, 3}) {
        Field v = Field::zeros(ctx.dom);
        for (int i = 0; i < cfg.n; ++i)
            v[i] = std::cos(k * M_PI * (ctx.dom->nodes[i] - cfg.eta) / cfg.L);
        probes.push_back(v);
    }

    auto max_residual = [&](double dt) {
        SimConfig c = cfg;
        c.dt = dt;
        Trajectory tr = solve(c, ctx);
        double worst = 0.0;
        for (size_t s = 1; s < tr.times.size(); ++s) {
            Field dphi = Field::zeros(ctx.dom), mu_mid = Field::zeros(ctx.dom);
            for (int i = 0; i < cfg.n; ++i) {
                dphi[i] = (tr.phi[s][i] - tr.phi[s - 1][i]) / tr.dt;
                mu_mid[i] = 0.5 * (tr.mu[s][i] + tr.mu[s - 1][i]);
            }
            for (const Field& v : probes)
                worst = std::max(worst,
                                 std::fabs(inner_H(dphi, v) + inner_V(mu_mid, v)) / norm_V(v));
        }
        return worst;
    };
    const double r1 = max_residual(2e-4);
    const double r2 = max_residual(1e-4);
    CHECK(r2 < r1 * 0.65); // at least first order

    // pseudo-mass identity is the v = 1 probe: d/dt(phi,1)_H = -(mu,1)_V
    // (mass is NOT conserved, the operator is -lap + 1)
    SimConfig c = cfg;
    c.dt = 1e-4;
    Trajectory tr = solve(c, ctx);
    bool mass_moves = false;
    double m0 = 0.0;
    Field one = Field::constant(ctx.dom, 1.0);
    for (size_t s = 0; s < tr.times.size(); ++s) {
        Field phi(ctx.dom, tr.phi[s]);
        const double m = inner_H(phi, one);
        if (s == 0) m0 = m;
        if (std::fabs(m - m0) > 1e-6 * std::fabs(m0)) mass_moves = true;
    }
    CHECK(mass_moves);
}

TEST_CASE("mu-equation residual of (P)_{eps,lambda} shrinks at second order") {
    SimConfig cfg = small_base();
    cfg.n = 65;
    cfg.eps = 0.1;
    cfg.lambda = 1e-2;
    cfg.scheme = Scheme::Rk4;
    cfg.T = 6.4e-4;
    cfg.snapshot_stride = 1;
    SimContext ctx = make_context(cfg);

    auto max_residual = [&](double dt) {
        SimConfig c = cfg;
        c.dt = dt;
        Trajectory tr = solve(c, ctx);
        double worst = 0.0;
        std::vector<double> mu_mid(static_cast<size_t>(cfg.n)), yos;
        for (size_t s = 1; s < tr.times.size(); ++s) {
            for (int i = 0; i < cfg.n; ++i)
                mu_mid[i] = 0.5 * (tr.mu[s][i] + tr.mu[s - 1][i]);
            ctx.ops->yosida_laplacian(*cfg.lambda, mu_mid, yos);
            for (int i = 0; i < cfg.n; ++i) {
                const double dmu = (tr.mu[s][i] - tr.mu[s - 1][i]) / tr.dt;
                const double dphi = (tr.phi[s][i] - tr.phi[s - 1][i]) / tr.dt;
                worst = std::max(worst,
                                 std::fabs(*cfg.lambda * dmu + dphi + yos[i] + mu_mid[i]));
            }
        }
        return worst;
    };
    const double r1 = max_residual(1.6e-5);
    const double r2 = max_residual(0.8e-5);
    CHECK(std::log2(r1 / r2) == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("determinism and Gronwall-type stability of (P)_eps") {
    SimConfig cfg = small_base();
    cfg.eps = 1e-2;
    cfg.scheme = Scheme::Rk4;
    cfg.ic.kind = InitialKind::RandomSym;
    cfg.ic.seed = 77;
    cfg.T = 1e-3;
    cfg.dt = 2e-5;

    Trajectory a = solve(cfg);
    Trajectory b = solve(cfg);
    REQUIRE(a.phi.size() == b.phi.size());
    for (size_t s = 0; s < a.phi.size(); ++s) CHECK(a.phi[s] == b.phi[s]); // bitwise

    // initial data differing by delta stay C delta apart in V*
    SimContext ctx = make_context(cfg);
    EllipticOps& ops = const_cast<EllipticOps&>(*ctx.ops);
    SimConfig base = cfg;
    base.ic.kind = InitialKind::GaussianBump;
    double ratio[2];
    int idx = 0;
    for (double delta : {1e-3, 1e-5}) {
        SimConfig pert = base;
        pert.ic.amplitude = 1.0 + delta;
        Trajectory t0 = solve(base, ctx), t1 = solve(pert, ctx);
        double dist = 0.0;
        for (size_t s = 0; s < t0.phi.size(); ++s) {
            Field d = Field(ctx.dom, t1.phi[s]) - Field(ctx.dom, t0.phi[s]);
            dist = std::max(dist, ops.norm_Vstar(d));
        }
        ratio[idx++] = dist / delta;
    }
    CHECK(ratio[0] == doctest::Approx(ratio[1]).epsilon(0.05)); // linear response
}

TEST_CASE("non-finite fields abort with the offending step") {
    SimConfig cfg = small_base();
    cfg.eps = 0.0;
    cfg.scheme = Scheme::SemiImplicit;
    cfg.ic.kind = InitialKind::Constant;
    cfg.ic.amplitude = 1e200; // overflows the cubic nonlinearity immediately
    cfg.T = 1e-3;
    cfg.dt = 1e-4;
    CHECK_THROWS_AS(solve(cfg), NumericalAbort);
}

TEST_CASE("a-priori report is finite and lambda^2 dissipation is recorded") {
    SimConfig cfg = small_base();
    cfg.eps = 0.1;
    cfg.lambda = 1e-2;
    cfg.scheme = Scheme::Rk4;
    cfg.ic.kind = InitialKind::Mollified;
    cfg.ic.base = InitialKind::TanhFront;
    cfg.T = 1e-3;
    cfg.dt = 1e-5;
    Trajectory tr = solve(cfg);
    AprioriReport rep = check_apriori(tr, cfg.eps);
    CHECK(rep.all_finite());
    CHECK(rep.lambda2_int_dtmu2 > 0.0);
    CHECK(rep.sup_phi_H2 > 0.0);
}
