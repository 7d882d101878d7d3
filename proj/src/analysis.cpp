#include "nlch/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace nlch {

double energy(const SimContext& ctx, const Field& phi) {
    return energy_value(ctx, phi.v, nullptr);
}

double energy(const SimContext& ctx, const Field& phi, double eps) {
    RegularizedPotential reg(ctx.potential, eps);
    return lyapunov_value(ctx, phi.v, &reg);
}

double energy_pair_form(const SimContext& ctx, const Field& phi, std::optional<double> eps) {
    const Domain1D& d = *ctx.dom;
    double pair = 0.0;
    for (int i = 0; i < d.n; ++i)
        for (int j = 0; j < d.n; ++j) {
            const double jij = ctx.kernel.eval(d.nodes[i] - d.nodes[j]) +
                               ctx.kernel.eval(d.nodes[i] + d.nodes[j]);
            const double du = phi[i] - phi[j];
            pair += d.weights[i] * d.weights[j] * jij * du * du;
        }
    pair *= 0.5; // mirror doubling of the double integral, then the 1/4 prefactor

    std::optional<RegularizedPotential> reg;
    if (eps) reg.emplace(ctx.potential, *eps);
    double pot = 0.0;
    for (int i = 0; i < d.n; ++i)
        pot += d.weights[i] * (reg ? reg->G_eps(phi[i]) : ctx.potential.G(phi[i]));
    double e = pair + Domain1D::symmetry_factor * pot;
    if (reg) e += 0.5 * *eps * inner_V(phi, phi);
    return e;
}

EnergyReport energy_balance(const Trajectory& traj) {
    EnergyReport r;
    r.times = traj.step_times;
    r.energy = traj.energy;
    r.residual = traj.residual;
    for (double x : r.residual) r.max_abs_residual = std::max(r.max_abs_residual, std::fabs(x));
    for (size_t k = 1; k < r.energy.size(); ++k)
        r.max_step_increase = std::max(r.max_step_increase, r.energy[k] - r.energy[k - 1]);
    return r;
}

bool AssumptionReport::pass() const {
    for (const auto& [name, ok] : booleans())
        if (!ok) return false;
    return true;
}

std::vector<std::pair<std::string, bool>> AssumptionReport::booleans() const {
    return {{"A1_kernel", a1_kernel},   {"A2_split", a2_split},
            {"A3_beta", a3_beta},       {"A4_pi", a4_pi},
            {"A5_lower_bound", a5_lower_bound}, {"A6_envelope", a6_envelope},
            {"A7_mass", a7_mass},       {"A7_inf_a", a7_inf_a},
            {"A8_initial_data", a8_initial_data}};
}

AssumptionReport validate_assumptions(const KernelSpec& kernel, const PotentialSpec& potential,
                                      const DomainPtr& dom, const Field& phi0) {
    AssumptionReport rep;
    rep.j_l1 = kernel_mass(kernel);

    Field a_closed = compute_a(kernel, dom, AMethod::Closed);
    rep.min_a_closed = a_closed[0];
    bool a_nonneg = true;
    for (int i = 0; i < dom->n; ++i) {
        rep.min_a_closed = std::min(rep.min_a_closed, a_closed[i]);
        a_nonneg = a_nonneg && a_closed[i] >= 0.0;
    }

    // (A1): even nonnegative kernel, a >= 0
    bool even_ok = true, nonneg_ok = true;
    for (double x = 0.0; x <= 6.0; x += 0.05) {
        even_ok = even_ok && kernel.eval(x) == kernel.eval(-x);
        nonneg_ok = nonneg_ok && kernel.eval(x) >= 0.0;
    }
    rep.a1_kernel = even_ok && nonneg_ok && a_nonneg;

    // (A3)-(A5) on a sampled r-grid
    bool beta_ok = potential.beta(0.0) == 0.0 && potential.betahat(0.0) == 0.0;
    bool convex_ok = true, a5_ok = true, pi_ok =
        potential.pi(0.0) == 0.0 && potential.pihat(0.0) == 0.0;
    const int m = 601;
    const double r_lo = -3.0, dr = 6.0 / static_cast<double>(m - 1);
    double prev_beta = potential.beta(r_lo);
    double prev2_bh = potential.betahat(r_lo), prev_bh = potential.betahat(r_lo + dr);
    for (int i = 0; i < m; ++i) {
        const double r = r_lo + dr * static_cast<double>(i);
        const double b = potential.beta(r);
        if (i > 0 && b < prev_beta - 1e-12) beta_ok = false;
        prev_beta = b;
        if (potential.betahat(r) < -1e-15) beta_ok = false;
        if (i >= 2) {
            const double bh = potential.betahat(r);
            if (bh - 2.0 * prev_bh + prev2_bh < -1e-9 * (1.0 + std::fabs(bh))) convex_ok = false;
            prev2_bh = prev_bh;
            prev_bh = bh;
        }
        if (potential.G(r) + 0.5 * potential.pi_lipschitz * r * r < -1e-12 * (1.0 + r * r * r * r))
            a5_ok = false;
        if (i > 0) {
            const double r_prev = r - dr;
            if (std::fabs(potential.pi(r) - potential.pi(r_prev)) >
                potential.pi_lipschitz * dr * (1.0 + 1e-12))
                pi_ok = false;
        }
    }
    rep.a3_beta = beta_ok && convex_ok;
    rep.a4_pi = pi_ok;
    rep.a5_lower_bound = a5_ok;
    rep.a2_split = true; // G = betahat + pihat holds by construction

    // (A6): envelope stays within [0, betahat] on samples
    bool env_ok = true;
    for (double eps : {1e-1, 1e-2}) {
        RegularizedPotential reg(potential, eps);
        for (double r = -3.0; r <= 3.0; r += 0.2) {
            const double e = reg.envelope(r);
            if (e < -1e-12 || e > potential.betahat(r) * (1.0 + 1e-12) + 1e-12) env_ok = false;
        }
    }
    rep.a6_envelope = env_ok;

    rep.a7_mass = rep.j_l1 < rep.c0 + rep.c1;
    rep.a7_inf_a = rep.min_a_closed >= rep.c0 + potential.pi_lipschitz;

    // (A8): mollifier family measured on phi0 over the eps grid
    EllipticOps ops(dom);
    rep.c3 = inner_H(phi0, phi0);
    double prev_dist = std::numeric_limits<double>::infinity();
    bool dist_decreasing = true;
    double first_dist = 0.0, last_dist = 0.0;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        Field moll = mollify_initial(ops, eps, phi0);
        const double q1 = inner_H(moll, moll);
        double g_l1 = 0.0;
        for (int i = 0; i < dom->n; ++i)
            g_l1 += dom->weights[i] * std::fabs(potential.G(moll[i]));
        g_l1 *= Domain1D::symmetry_factor;
        const double q3 = eps * (inner_V(moll, moll) - inner_H(moll, moll));
        rep.c2 = std::max({rep.c2, q1, g_l1, q3});

        const Field diff = moll - phi0;
        const double dist = norm_H(diff);
        if (eps == 1e-1) first_dist = dist;
        last_dist = dist;
        if (dist > prev_dist * (1.0 + 1e-12)) dist_decreasing = false;
        prev_dist = dist;

        const double vstar2 = std::pow(ops.norm_Vstar(diff), 2);
        rep.mollifier_vstar_ratio_max =
            std::max(rep.mollifier_vstar_ratio_max, vstar2 / std::sqrt(eps));
    }
    rep.a8_initial_data = std::isfinite(rep.c2) && dist_decreasing && last_dist < first_dist &&
                          rep.mollifier_vstar_ratio_max <= rep.c3 * (1.0 + 1e-12);
    return rep;
}

std::pair<double, double> fit_loglog(const std::vector<double>& params,
                                     const std::vector<double>& errors) {
    const size_t m = params.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < m; ++i) {
        const double x = std::log(params[i]), y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = static_cast<double>(m) * sxx - sx * sx;
    const double p = (static_cast<double>(m) * sxy - sx * sy) / denom;
    const double logC = (sy - p * sx) / static_cast<double>(m);
    return {p, std::exp(logC)};
}

namespace {

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[static_cast<size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// dt that divides the snapshot interval and respects both the accuracy cap
// (base dt) and the stability guard.
std::pair<double, int> pick_dt(double snap_interval, double dt_cap, double guard) {
    double target = dt_cap;
    if (std::isfinite(guard)) target = std::min(target, 0.9 * guard);
    const int m = std::max(1, static_cast<int>(std::ceil(snap_interval / target - 1e-9)));
    return {snap_interval / static_cast<double>(m), m};
}

struct Distance {
    double vstar_sq = 0.0;
    double l2h_sq = 0.0;
};

Distance trajectory_distance(const Trajectory& a, const Trajectory& b, const EllipticOps& ops,
                             const DomainPtr& dom) {
    if (a.times.size() != b.times.size())
        throw std::logic_error("trajectory_distance: snapshot grids differ");
    Distance d;
    std::vector<double> diff(static_cast<size_t>(dom->n)), ainv;
    double prev_h2 = 0.0;
    for (size_t s = 0; s < a.times.size(); ++s) {
        for (size_t i = 0; i < diff.size(); ++i) diff[i] = a.phi[s][i] - b.phi[s][i];
        ops.F_inverse(diff, ainv);
        const double vstar2 = inner_H_raw(*dom, diff, ainv);
        const double h2 = inner_H_raw(*dom, diff, diff);
        d.vstar_sq = std::max(d.vstar_sq, vstar2);
        if (s > 0) d.l2h_sq += 0.5 * (a.times[s] - a.times[s - 1]) * (prev_h2 + h2);
        prev_h2 = h2;
    }
    return d;
}

InitialKind mollify_base(const SimConfig& cfg) {
    return cfg.ic.kind == InitialKind::Mollified ? cfg.ic.base : cfg.ic.kind;
}

void finalize_fit(ConvergenceReport& rep) {
    std::vector<double> ps, es;
    for (const auto& pt : rep.points)
        if (pt.total > 0.0) {
            ps.push_back(pt.param);
            es.push_back(pt.total);
        }
    std::vector<double> distinct = ps;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) {
        rep.flagged_degenerate = true;
        return;
    }
    auto [p, c] = fit_loglog(ps, es);
    rep.fitted_p = p;
    rep.fitted_C = c;
    rep.fit_valid = true;
    if (ps.size() >= 4) {
        // discard the largest parameter if it sits off the asymptotic line
        size_t imax = 0;
        for (size_t i = 1; i < ps.size(); ++i)
            if (ps[i] > ps[imax]) imax = i;
        const double resid = std::log(es[imax]) - (p * std::log(ps[imax]) + std::log(c));
        if (std::fabs(resid) > 1.1513) { // half a decade
            std::vector<double> ps2, es2;
            for (size_t i = 0; i < ps.size(); ++i)
                if (i != imax) {
                    ps2.push_back(ps[i]);
                    es2.push_back(es[i]);
                }
            std::tie(rep.fitted_p, rep.fitted_C) = fit_loglog(ps2, es2);
            rep.dropped_largest = true;
        }
    }
    for (const auto& pt : rep.points)
        rep.cover_C = std::max(rep.cover_C, pt.total / std::sqrt(pt.param));
    for (size_t i = 1; i < rep.points.size(); ++i)
        if (rep.points[i].total > rep.points[i - 1].total * 1.1) rep.monotone = false;
}

} // namespace

ConvergenceReport converge_eps(const SimConfig& base, const std::vector<double>& eps_list,
                               EpsReference reference, int n_snapshots, int threads) {
    ConvergenceReport rep;
    if (eps_list.empty()) {
        rep.flagged_degenerate = true;
        return rep;
    }

    const double snap = base.T / static_cast<double>(n_snapshots);
    double guard = std::numeric_limits<double>::infinity();
    for (double eps : eps_list) {
        SimConfig c = base;
        c.eps = eps;
        c.lambda.reset();
        c.scheme = Scheme::Rk4;
        guard = std::min(guard, rk4_guard_dt(c));
    }
    auto [dt, stride] = pick_dt(snap, base.dt, guard);

    auto run_cfg = [&](double eps) {
        SimConfig c = base;
        c.eps = eps;
        c.lambda.reset();
        c.scheme = Scheme::Rk4;
        c.dt = dt;
        c.snapshot_stride = stride;
        c.ic.kind = InitialKind::Mollified;
        c.ic.base = mollify_base(base);
        return c;
    };

    const int runs = static_cast<int>(eps_list.size());
    std::vector<Trajectory> trajs(static_cast<size_t>(runs));
    Trajectory ref_traj;
    const bool direct = reference == EpsReference::DirectP;
    parallel_for(runs + (direct ? 1 : 0), threads, [&](int i) {
        if (i == runs) { // direct limit-problem reference
            SimConfig c = base;
            c.eps = 0.0;
            c.lambda.reset();
            c.scheme = Scheme::SemiImplicit;
            c.dt = dt;
            c.snapshot_stride = stride;
            c.ic.kind = mollify_base(base);
            ref_traj = solve(c);
        } else {
            trajs[static_cast<size_t>(i)] = solve(run_cfg(eps_list[static_cast<size_t>(i)]));
        }
    });
    if (!direct) ref_traj = trajs.back(); // smallest eps (grid is decreasing)

    auto dom = make_domain(base.eta, base.L, base.n);
    EllipticOps ops(dom);
    const int fit_runs = direct ? runs : runs - 1;
    for (int i = 0; i < fit_runs; ++i) {
        const Distance d = trajectory_distance(trajs[static_cast<size_t>(i)], ref_traj, ops, dom);
        rep.points.push_back(
            {eps_list[static_cast<size_t>(i)], d.vstar_sq, d.l2h_sq, d.vstar_sq + d.l2h_sq, 0.0});
    }
    finalize_fit(rep);
    return rep;
}

ConvergenceReport converge_lambda(const SimConfig& base, const std::vector<double>& lambda_list,
                                  int n_snapshots, int threads) {
    if (!(base.eps > 0.0))
        throw std::invalid_argument("converge_lambda: base config needs eps > 0");
    ConvergenceReport rep;
    if (lambda_list.empty()) {
        rep.flagged_degenerate = true;
        return rep;
    }
    const double snap = base.T / static_cast<double>(n_snapshots);

    auto lam_cfg = [&](double lam) {
        SimConfig c = base;
        c.lambda = lam;
        c.scheme = Scheme::Rk4;
        c.ic.kind = InitialKind::Mollified;
        c.ic.base = mollify_base(base);
        auto [dt, stride] = pick_dt(snap, base.dt, rk4_guard_dt(c));
        c.dt = dt;
        c.snapshot_stride = stride;
        return c;
    };

    const int runs = static_cast<int>(lambda_list.size());
    std::vector<Trajectory> trajs(static_cast<size_t>(runs));
    Trajectory ref_traj;
    parallel_for(runs + 1, threads, [&](int i) {
        if (i == runs) { // direct (P)_eps reference
            SimConfig c = base;
            c.lambda.reset();
            c.scheme = Scheme::Rk4;
            c.ic.kind = InitialKind::Mollified;
            c.ic.base = mollify_base(base);
            auto [dt, stride] = pick_dt(snap, base.dt, rk4_guard_dt(c));
            c.dt = dt;
            c.snapshot_stride = stride;
            ref_traj = solve(c);
        } else {
            trajs[static_cast<size_t>(i)] = solve(lam_cfg(lambda_list[static_cast<size_t>(i)]));
        }
    });

    auto dom = make_domain(base.eta, base.L, base.n);
    EllipticOps ops(dom);
    for (int i = 0; i < runs; ++i) {
        const Distance d = trajectory_distance(trajs[static_cast<size_t>(i)], ref_traj, ops, dom);
        rep.points.push_back({lambda_list[static_cast<size_t>(i)], d.vstar_sq, d.l2h_sq,
                              d.vstar_sq + d.l2h_sq,
                              trajs[static_cast<size_t>(i)].lambda2_int_dtmu2.back()});
    }
    finalize_fit(rep);
    return rep;
}

ConvergenceReport cauchy_table(const SimConfig& base, const std::vector<double>& eps_list,
                               int n_snapshots, int threads) {
    ConvergenceReport rep;
    if (eps_list.size() < 2) {
        rep.flagged_degenerate = true;
        return rep;
    }
    const double snap = base.T / static_cast<double>(n_snapshots);
    double guard = std::numeric_limits<double>::infinity();
    for (double eps : eps_list) {
        SimConfig c = base;
        c.eps = eps;
        c.lambda.reset();
        c.scheme = Scheme::Rk4;
        guard = std::min(guard, rk4_guard_dt(c));
    }
    auto [dt, stride] = pick_dt(snap, base.dt, guard);

    const int runs = static_cast<int>(eps_list.size());
    std::vector<Trajectory> trajs(static_cast<size_t>(runs));
    parallel_for(runs, threads, [&](int i) {
        SimConfig c = base;
        c.eps = eps_list[static_cast<size_t>(i)];
        c.lambda.reset();
        c.scheme = Scheme::Rk4;
        c.dt = dt;
        c.snapshot_stride = stride;
        c.ic.kind = InitialKind::Mollified;
        c.ic.base = mollify_base(base);
        trajs[static_cast<size_t>(i)] = solve(c);
    });

    auto dom = make_domain(base.eta, base.L, base.n);
    EllipticOps ops(dom);
    std::vector<double> diff(static_cast<size_t>(dom->n)), ainv;
    for (int i = 0; i < runs; ++i)
        for (int j = i + 1; j < runs; ++j) {
            const Distance d = trajectory_distance(trajs[static_cast<size_t>(i)],
                                                   trajs[static_cast<size_t>(j)], ops, dom);
            // ||phi_{0eps} - phi_{0gamma}||_{V*}^2 from the recorded initial snapshots
            for (size_t k = 0; k < diff.size(); ++k)
                diff[k] = trajs[static_cast<size_t>(i)].phi[0][k] - trajs[static_cast<size_t>(j)].phi[0][k];
            ops.F_inverse(diff, ainv);
            const double ic_vstar2 = inner_H_raw(*dom, diff, ainv);

            CauchyPair pair;
            pair.eps = eps_list[static_cast<size_t>(i)];
            pair.gamma = eps_list[static_cast<size_t>(j)];
            pair.vstar_sq = d.vstar_sq;
            pair.l2h_sq = d.l2h_sq;
            pair.d = d.vstar_sq + d.l2h_sq;
            pair.denom = std::sqrt(pair.eps) + std::sqrt(pair.gamma) + ic_vstar2;
            rep.pairs.push_back(pair);
            rep.cauchy_C = std::max(rep.cauchy_C, pair.d / pair.denom);
        }
    return rep;
}

} // namespace nlch
