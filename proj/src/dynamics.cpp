#include "nlch/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace nlch {

Level SimConfig::level() const {
    if (lambda.has_value()) return Level::PepsLambda;
    return eps > 0.0 ? Level::Peps : Level::P;
}

void SimConfig::validate() const {
    if (!(T > 0.0)) throw std::invalid_argument("config: T must be positive");
    if (!(dt > 0.0) || dt > T) throw std::invalid_argument("config: need 0 < dt <= T");
    if (eps < 0.0) throw std::invalid_argument("config: eps must be nonnegative");
    if (eps == 0.0 && scheme != Scheme::SemiImplicit)
        throw std::invalid_argument("config: the limit problem (eps = 0) requires scheme = semi_implicit");
    if (lambda.has_value()) {
        if (!(*lambda > 0.0)) throw std::invalid_argument("config: lambda must be positive");
        if (!(eps > 0.0)) throw std::invalid_argument("config: (P)_{eps,lambda} needs eps > 0");
        if (scheme != Scheme::Rk4)
            throw std::invalid_argument("config: (P)_{eps,lambda} is integrated by rk4");
    }
    if (snapshot_stride < 1) throw std::invalid_argument("config: snapshot_stride must be >= 1");
    if (ic.kind == InitialKind::Mollified && !(eps > 0.0))
        throw std::invalid_argument("config: mollified initial data needs eps > 0");
    if (!(c_J > 0.0)) throw std::invalid_argument("config: kernel amplitude c_J must be positive");
}

double inner_H_raw(const Domain1D& d, const std::vector<double>& a, const std::vector<double>& b) {
    return Domain1D::symmetry_factor * weighted_dot(d.weights, a, b);
}

double inner_V_raw(const Domain1D& d, const std::vector<double>& a, const std::vector<double>& b) {
    double grad = 0.0;
    for (size_t i = 0; i + 1 < a.size(); ++i)
        grad += (a[i + 1] - a[i]) * (b[i + 1] - b[i]);
    return Domain1D::symmetry_factor * grad / d.h + inner_H_raw(d, a, b);
}

SimContext make_context(const SimConfig& cfg) {
    cfg.validate();
    SimContext ctx;
    ctx.dom = make_domain(cfg.eta, cfg.L, cfg.n);
    ctx.kernel = KernelSpec{cfg.c_J};
    ctx.potential = quartic_potential();
    ctx.conv = std::make_shared<ConvolutionOperator>(ctx.kernel, ctx.dom);
    std::vector<double> lambdas;
    if (cfg.lambda) lambdas.push_back(*cfg.lambda);
    std::vector<double> epsilons;
    if (cfg.eps > 0.0) epsilons.push_back(cfg.eps);
    ctx.ops = std::make_shared<EllipticOps>(ctx.dom, lambdas, epsilons);
    ctx.path = cfg.convolution;
    ctx.a = ctx.conv->a_quad(ctx.path).v;
    ctx.a_max = *std::max_element(ctx.a.begin(), ctx.a.end());
    return ctx;
}

Field mollify_initial(const EllipticOps& ops, double eps, const Field& phi0) {
    if (!(eps > 0.0)) throw std::invalid_argument("mollify_initial: eps must be positive");
    return ops.solve_I_plus_epsA(eps, phi0);
}

namespace {

Field base_initial(const SimConfig& cfg, const DomainPtr& dom, InitialKind kind) {
    Field f = Field::zeros(dom);
    const double xc = cfg.eta + 0.5 * cfg.L;
    const double amp = cfg.ic.amplitude;
    switch (kind) {
    case InitialKind::TanhFront:
        for (int i = 0; i < dom->n; ++i) f[i] = amp * std::tanh(dom->nodes[i] - xc);
        break;
    case InitialKind::GaussianBump:
        for (int i = 0; i < dom->n; ++i) {
            const double r = dom->nodes[i] - xc;
            f[i] = amp * std::exp(-r * r);
        }
        break;
    case InitialKind::RandomSym: {
        // mt19937_64 raw-bits/v1: top 53 bits mapped to [0,1), then [-1,1)
        std::mt19937_64 rng(cfg.ic.seed);
        for (int i = 0; i < dom->n; ++i)
            f[i] = amp * (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0);
        break;
    }
    case InitialKind::Constant:
        for (int i = 0; i < dom->n; ++i) f[i] = amp;
        break;
    case InitialKind::Mollified:
        throw std::logic_error("base_initial: mollified is not a base kind");
    }
    return f;
}

} // namespace

Field initial_field(const SimConfig& cfg, const SimContext& ctx) {
    if (cfg.ic.kind == InitialKind::Mollified)
        return mollify_initial(*ctx.ops, cfg.eps, base_initial(cfg, ctx.dom, cfg.ic.base));
    return base_initial(cfg, ctx.dom, cfg.ic.kind);
}

Field raw_initial_field(const SimConfig& cfg, const DomainPtr& dom) {
    const InitialKind kind =
        cfg.ic.kind == InitialKind::Mollified ? cfg.ic.base : cfg.ic.kind;
    return base_initial(cfg, dom, kind);
}

Field mu_of_phi_P_eps(const SimContext& ctx, double eps, const Field& phi) {
    if (!(eps > 0.0)) throw std::invalid_argument("mu_of_phi_P_eps: eps must be positive");
    RegularizedPotential reg(ctx.potential, eps);
    std::vector<double> Jphi, Aphi, S(phi.v.size()), mu;
    ctx.conv->apply(phi.v, Jphi, ctx.path);
    ctx.ops->apply_A(phi.v, Aphi);
    for (size_t i = 0; i < S.size(); ++i)
        S[i] = eps * Aphi[i] + ctx.a[i] * phi.v[i] - Jphi[i] + reg.G_eps_prime(phi.v[i]);
    ctx.ops->solve_I_plus_epsA(eps, S, mu);
    return Field(ctx.dom, std::move(mu));
}

void rhs_P_eps_lambda(const SimContext& ctx, const RegularizedPotential& reg, double lambda,
                      const std::vector<double>& phi, const std::vector<double>& mu,
                      std::vector<double>& dphi, std::vector<double>& dmu) {
    const double eps = reg.eps();
    const double ieps = 1.0 / eps, ilam = 1.0 / lambda;
    std::vector<double> Jphi, yos_phi, yos_mu;
    ctx.conv->apply(phi, Jphi, ctx.path);
    ctx.ops->yosida_laplacian(lambda, phi, yos_phi);
    ctx.ops->yosida_laplacian(lambda, mu, yos_mu);
    const size_t n = phi.size();
    dphi.resize(n);
    dmu.resize(n);
    for (size_t i = 0; i < n; ++i) {
        dphi[i] = -yos_phi[i] - phi[i] -
                  ieps * (ctx.a[i] * phi[i] - Jphi[i] + reg.G_eps_prime(phi[i]) - mu[i]);
        dmu[i] = -ilam * dphi[i] - ilam * (yos_mu[i] + mu[i]);
    }
}

double lipschitz_K(const SimConfig& cfg) {
    const double h = cfg.L / static_cast<double>(cfg.n - 1);
    const double mu_max = 4.0 / (h * h);
    const double a_inf = KernelSpec{cfg.c_J}.l1_mass(); // a(x) <= ||J||_L1
    const double j1 = KernelSpec{cfg.c_J}.l1_mass();
    const double pi_lip = quartic_potential().pi_lipschitz;
    if (cfg.level() == Level::PepsLambda) {
        const double lam = *cfg.lambda, eps = cfg.eps;
        const double nu = mu_max / (1.0 + lam * mu_max); // ||(-lap)_lam||
        const double l_phi = (nu + 1.0) + (a_inf + j1 + 1.0 / eps + pi_lip) / eps;
        const double l_mu = 1.0 / eps;
        const double m00 = l_phi, m01 = l_mu;
        const double m10 = l_phi / lam, m11 = (1.0 / eps + nu + 1.0) / lam;
        // spectral norm of the 2x2 coupling bound matrix
        const double t = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11;
        const double det = m00 * m11 - m01 * m10;
        const double disc = std::sqrt(std::max(0.0, t * t - 4.0 * det * det));
        return std::sqrt(0.5 * (t + disc));
    }
    if (cfg.level() == Level::Peps) {
        const double eps = cfg.eps;
        const double muA = mu_max + 1.0;
        const double s = muA / (1.0 + eps * muA); // ||A (I + eps A)^{-1}||
        return s * (eps * muA + a_inf + j1 + 1.0 / eps + pi_lip);
    }
    return 0.0; // semi-implicit limit problem carries no RK4 guard
}

double rk4_guard_dt(const SimConfig& cfg) {
    const double K = lipschitz_K(cfg);
    return K > 0.0 ? 2.0 / K : std::numeric_limits<double>::infinity();
}

double energy_value(const SimContext& ctx, const std::vector<double>& phi,
                    const RegularizedPotential* reg) {
    std::vector<double> Jphi;
    ctx.conv->apply(phi, Jphi, ctx.path);
    const auto& w = ctx.dom->weights;
    double pair = 0.0, pot = 0.0;
    for (size_t i = 0; i < phi.size(); ++i) {
        pair += w[i] * phi[i] * (ctx.a[i] * phi[i] - Jphi[i]);
        pot += w[i] * (reg ? reg->G_eps(phi[i]) : ctx.potential.G(phi[i]));
    }
    return pair + Domain1D::symmetry_factor * pot;
}

double lyapunov_value(const SimContext& ctx, const std::vector<double>& phi,
                      const RegularizedPotential* reg) {
    double e = energy_value(ctx, phi, reg);
    if (reg) e += 0.5 * reg->eps() * inner_V_raw(*ctx.dom, phi, phi);
    return e;
}

namespace {

// Per-step diagnostics shared by all three integrators. Trapezoid rule for
// nodal integrands, midpoint sums for increment-based ones; the RK4 runs
// additionally carry a stage-quadrature dissipation (diss_quad) so the
// energy residual converges at the scheme order.
class Recorder {
  public:
    Recorder(Trajectory& tr, const SimContext& ctx, const RegularizedPotential* reg,
             std::optional<double> lambda, Scheme scheme, int stride)
        : tr_(tr), ctx_(ctx), reg_(reg), lambda_(lambda), scheme_(scheme), stride_(stride) {}

    void initial(const std::vector<double>& phi, const std::vector<double>& mu) {
        push_nodal(phi, mu);
        tr_.step_times.push_back(0.0);
        tr_.int_mu_V2.push_back(0.0);
        tr_.diss_quad.push_back(0.0);
        tr_.int_phi_V2.push_back(0.0);
        tr_.int_dtphi_Vstar2.push_back(0.0);
        tr_.int_beta2.push_back(0.0);
        tr_.eps_int_Aphi2.push_back(0.0);
        tr_.eps_int_dtphi2.push_back(0.0);
        tr_.lambda2_int_dtmu2.push_back(0.0);
        lyap0_ = tr_.energy.back();
        tr_.residual.push_back(0.0);
        snapshot(0, 0.0, phi, mu);
    }

    void step(int step, const std::vector<double>& phi, const std::vector<double>& mu,
              const std::vector<double>& phi_prev, const std::vector<double>& mu_prev,
              double diss_quad_cum) {
        const double dt = tr_.dt;
        const double t = static_cast<double>(step) * dt;
        const double prev_mu_V2 = tr_.norm_mu_V2.back();
        const double prev_phi_V2 = tr_.norm_phi_V2.back();
        const double prev_beta2 = last_beta2_;
        const double prev_Aphi2 = last_Aphi2_;

        push_nodal(phi, mu);

        tr_.step_times.push_back(t);
        tr_.int_mu_V2.push_back(tr_.int_mu_V2.back() + 0.5 * dt * (prev_mu_V2 + tr_.norm_mu_V2.back()));
        tr_.int_phi_V2.push_back(tr_.int_phi_V2.back() + 0.5 * dt * (prev_phi_V2 + tr_.norm_phi_V2.back()));
        tr_.int_beta2.push_back(tr_.int_beta2.back() + 0.5 * dt * (prev_beta2 + last_beta2_));
        const double eps = reg_ ? reg_->eps() : 0.0;
        tr_.eps_int_Aphi2.push_back(tr_.eps_int_Aphi2.back() + eps * 0.5 * dt * (prev_Aphi2 + last_Aphi2_));

        // increment-based (midpoint in time)
        const size_t n = phi.size();
        ws_.resize(n);
        for (size_t i = 0; i < n; ++i) ws_[i] = (phi[i] - phi_prev[i]) / dt;
        const double dtphi2 = inner_H_raw(*ctx_.dom, ws_, ws_);
        ctx_.ops->F_inverse(ws_, ws2_);
        const double dtphi_Vstar2 = inner_H_raw(*ctx_.dom, ws_, ws2_);
        tr_.eps_int_dtphi2.push_back(tr_.eps_int_dtphi2.back() + eps * dt * dtphi2);
        tr_.int_dtphi_Vstar2.push_back(tr_.int_dtphi_Vstar2.back() + dt * dtphi_Vstar2);

        double dmu2 = 0.0;
        if (lambda_) {
            for (size_t i = 0; i < n; ++i) ws_[i] = (mu[i] - mu_prev[i]) / dt;
            dmu2 = inner_H_raw(*ctx_.dom, ws_, ws_);
        }
        tr_.lambda2_int_dtmu2.push_back(tr_.lambda2_int_dtmu2.back() +
                                        (lambda_ ? (*lambda_) * (*lambda_) * dt * dmu2 : 0.0));

        if (scheme_ == Scheme::Rk4 && !lambda_) {
            tr_.diss_quad.push_back(diss_quad_cum);
        } else {
            // semi-implicit / lambda level: trapezoid dissipation
            tr_.diss_quad.push_back(tr_.int_mu_V2.back() + tr_.eps_int_dtphi2.back());
        }
        tr_.residual.push_back(tr_.energy.back() + tr_.diss_quad.back() - lyap0_);

        snapshot(step, t, phi, mu);
    }

  private:
    void push_nodal(const std::vector<double>& phi, const std::vector<double>& mu) {
        tr_.norm_phi_H2.push_back(inner_H_raw(*ctx_.dom, phi, phi));
        tr_.norm_phi_V2.push_back(inner_V_raw(*ctx_.dom, phi, phi));
        tr_.norm_mu_V2.push_back(inner_V_raw(*ctx_.dom, mu, mu));
        tr_.energy.push_back(lyapunov_value(ctx_, phi, reg_));

        const size_t n = phi.size();
        ws_.resize(n);
        for (size_t i = 0; i < n; ++i)
            ws_[i] = reg_ ? reg_->yosida(phi[i]) : ctx_.potential.beta(phi[i]);
        last_beta2_ = inner_H_raw(*ctx_.dom, ws_, ws_);
        ctx_.ops->apply_A(phi, ws2_);
        last_Aphi2_ = inner_H_raw(*ctx_.dom, ws2_, ws2_);
    }

    void snapshot(int step, double t, const std::vector<double>& phi, const std::vector<double>& mu) {
        if (step % stride_ != 0 && step != tr_.steps) return;
        if (!tr_.times.empty() && tr_.times.back() == t) return;
        tr_.times.push_back(t);
        tr_.snap_steps.push_back(step);
        tr_.phi.push_back(phi);
        tr_.mu.push_back(mu);
    }

    Trajectory& tr_;
    const SimContext& ctx_;
    const RegularizedPotential* reg_;
    std::optional<double> lambda_;
    Scheme scheme_;
    int stride_;
    double lyap0_ = 0.0;
    double last_beta2_ = 0.0, last_Aphi2_ = 0.0;
    std::vector<double> ws_, ws2_;
};

void check_finite(const std::vector<double>& v, int step, const char* what) {
    for (double x : v)
        if (!std::isfinite(x))
            throw NumericalAbort(step, std::string("non-finite ") + what + " at step " +
                                           std::to_string(step));
}

// Reduced (P)_eps right-hand side; also hands out mu and the dissipation
// integrand g = ||mu||_V^2 + eps ||dphi||_H^2 for stage quadrature.
class PepsRhs {
  public:
    PepsRhs(const SimContext& ctx, const RegularizedPotential& reg) : ctx_(ctx), reg_(reg) {}

    void operator()(const std::vector<double>& phi, std::vector<double>& dphi,
                    std::vector<double>& mu, double* g = nullptr) {
        const double eps = reg_.eps();
        const size_t n = phi.size();
        ctx_.conv->apply(phi, Jphi_, ctx_.path);
        ctx_.ops->apply_A(phi, Aphi_);
        S_.resize(n);
        for (size_t i = 0; i < n; ++i)
            S_[i] = eps * Aphi_[i] + ctx_.a[i] * phi[i] - Jphi_[i] + reg_.G_eps_prime(phi[i]);
        ctx_.ops->solve_I_plus_epsA(eps, S_, mu);
        ctx_.ops->apply_A(mu, dphi);
        for (size_t i = 0; i < n; ++i) dphi[i] = -dphi[i];
        if (g) {
            // ||mu||_V^2 = (A mu, mu)_H = -(dphi, mu)_H
            *g = -inner_H_raw(*ctx_.dom, dphi, mu) + eps * inner_H_raw(*ctx_.dom, dphi, dphi);
        }
    }

  private:
    const SimContext& ctx_;
    const RegularizedPotential& reg_;
    std::vector<double> Jphi_, Aphi_, S_;
};

Trajectory integrate_rk4_P_eps(const SimConfig& cfg, const SimContext& ctx, Field phi0) {
    RegularizedPotential reg(ctx.potential, cfg.eps);
    PepsRhs rhs(ctx, reg);

    Trajectory tr;
    tr.steps = static_cast<int>(std::ceil(cfg.T / cfg.dt * (1.0 - 1e-12)));
    tr.dt = cfg.T / static_cast<double>(tr.steps);
    Recorder rec(tr, ctx, &reg, std::nullopt, Scheme::Rk4, cfg.snapshot_stride);

    std::vector<double> phi = phi0.v, phi_prev;
    std::vector<double> k1, k2, k3, k4, y, mu1, mu_s;
    double g1 = 0.0, gs = 0.0, dissq = 0.0;
    const double dt = tr.dt;

    rhs(phi, k1, mu1, &g1);
    rec.initial(phi, mu1);
    for (int step = 1; step <= tr.steps; ++step) {
        const size_t n = phi.size();
        phi_prev = phi;
        double gsum = g1;

        y.resize(n);
        for (size_t i = 0; i < n; ++i) y[i] = phi[i] + 0.5 * dt * k1[i];
        rhs(y, k2, mu_s, &gs);
        gsum += 2.0 * gs;
        for (size_t i = 0; i < n; ++i) y[i] = phi[i] + 0.5 * dt * k2[i];
        rhs(y, k3, mu_s, &gs);
        gsum += 2.0 * gs;
        for (size_t i = 0; i < n; ++i) y[i] = phi[i] + dt * k3[i];
        rhs(y, k4, mu_s, &gs);
        gsum += gs;

        for (size_t i = 0; i < n; ++i)
            phi[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        dissq += dt / 6.0 * gsum;
        check_finite(phi, step, "phi");

        rhs(phi, k1, mu1, &g1); // k1 of the next step doubles as diagnostics
        rec.step(step, phi, mu1, phi_prev, mu1, dissq);
    }
    return tr;
}

Trajectory integrate_rk4_P_eps_lambda(const SimConfig& cfg, const SimContext& ctx, Field phi0) {
    RegularizedPotential reg(ctx.potential, cfg.eps);
    const double lam = *cfg.lambda;

    Trajectory tr;
    tr.steps = static_cast<int>(std::ceil(cfg.T / cfg.dt * (1.0 - 1e-12)));
    tr.dt = cfg.T / static_cast<double>(tr.steps);
    Recorder rec(tr, ctx, &reg, lam, Scheme::Rk4, cfg.snapshot_stride);

    std::vector<double> phi = phi0.v, mu = phi0.v; // mu(0) = phi(0) = phi_{0eps}
    std::vector<double> phi_prev, mu_prev;
    std::vector<double> kp1, km1, kp2, km2, kp3, km3, kp4, km4, yp, ym;
    const double dt = tr.dt;

    rec.initial(phi, mu);
    for (int step = 1; step <= tr.steps; ++step) {
        const size_t n = phi.size();
        phi_prev = phi;
        mu_prev = mu;

        rhs_P_eps_lambda(ctx, reg, lam, phi, mu, kp1, km1);
        yp.resize(n);
        ym.resize(n);
        for (size_t i = 0; i < n; ++i) {
            yp[i] = phi[i] + 0.5 * dt * kp1[i];
            ym[i] = mu[i] + 0.5 * dt * km1[i];
        }
        rhs_P_eps_lambda(ctx, reg, lam, yp, ym, kp2, km2);
        for (size_t i = 0; i < n; ++i) {
            yp[i] = phi[i] + 0.5 * dt * kp2[i];
            ym[i] = mu[i] + 0.5 * dt * km2[i];
        }
        rhs_P_eps_lambda(ctx, reg, lam, yp, ym, kp3, km3);
        for (size_t i = 0; i < n; ++i) {
            yp[i] = phi[i] + dt * kp3[i];
            ym[i] = mu[i] + dt * km3[i];
        }
        rhs_P_eps_lambda(ctx, reg, lam, yp, ym, kp4, km4);
        for (size_t i = 0; i < n; ++i) {
            phi[i] += dt / 6.0 * (kp1[i] + 2.0 * kp2[i] + 2.0 * kp3[i] + kp4[i]);
            mu[i] += dt / 6.0 * (km1[i] + 2.0 * km2[i] + 2.0 * km3[i] + km4[i]);
        }
        check_finite(phi, step, "phi");
        check_finite(mu, step, "mu");
        rec.step(step, phi, mu, phi_prev, mu_prev, 0.0);
    }
    return tr;
}

// Stabilized linearly-implicit scheme in increment form:
//   (I + eps A + dt A (eps A + diag(a) - pi_lip + S)) delta = -dt A S(phi^n),
//   S(phi) = eps A phi + a phi - J*phi + G'(phi),  S = beta'(max|phi|).
// For eps = 0 this is exactly the stabilized (P) update; mu^n = B^{-1} S(phi^n)
// is recorded, and a zero chemical potential is preserved bitwise.
Trajectory integrate_semi_implicit(const SimConfig& cfg, const SimContext& ctx, Field phi0) {
    const double eps = cfg.eps;
    std::optional<RegularizedPotential> reg;
    if (eps > 0.0) reg.emplace(ctx.potential, eps);

    Trajectory tr;
    tr.steps = static_cast<int>(std::ceil(cfg.T / cfg.dt * (1.0 - 1e-12)));
    tr.dt = cfg.T / static_cast<double>(tr.steps);
    Recorder rec(tr, ctx, reg ? &*reg : nullptr, std::nullopt, Scheme::SemiImplicit,
                 cfg.snapshot_stride);

    const int n = ctx.dom->n;
    const double dt = tr.dt;
    const auto& ll = ctx.ops->lap_lower();
    const auto& ld = ctx.ops->lap_diag();
    const auto& lu = ctx.ops->lap_upper();
    auto Aat = [&](int i, int j) -> double {
        if (i == j) return ld[static_cast<size_t>(i)] + 1.0;
        if (j == i - 1) return ll[static_cast<size_t>(j)];
        if (j == i + 1) return lu[static_cast<size_t>(i)];
        return 0.0;
    };

    std::vector<double> phi = phi0.v, phi_prev, Jphi, Aphi, S(static_cast<size_t>(n)), mu, rhs, delta;
    auto compute_S_mu = [&](const std::vector<double>& p) {
        ctx.conv->apply(p, Jphi, ctx.path);
        ctx.ops->apply_A(p, Aphi);
        for (int i = 0; i < n; ++i) {
            const double gp = reg ? reg->G_eps_prime(p[static_cast<size_t>(i)])
                                  : ctx.potential.G_prime(p[static_cast<size_t>(i)]);
            S[static_cast<size_t>(i)] = eps * Aphi[static_cast<size_t>(i)] +
                                        ctx.a[static_cast<size_t>(i)] * p[static_cast<size_t>(i)] -
                                        Jphi[static_cast<size_t>(i)] + gp;
        }
        if (eps > 0.0)
            ctx.ops->solve_I_plus_epsA(eps, S, mu);
        else
            mu = S;
    };

    compute_S_mu(phi);
    rec.initial(phi, mu);
    for (int step = 1; step <= tr.steps; ++step) {
        double pmax = 0.0;
        for (double x : phi) pmax = std::max(pmax, std::fabs(x));
        const double stab = ctx.potential.beta_prime(pmax); // 12 max(phi)^2 for the quartic

        // diagonal of X = eps A + diag(a - pi_lip + stab) assembled below
        BandedFactor M(n, 2, 2);
        for (int i = 0; i < n; ++i) {
            const int jlo = std::max(0, i - 2), jhi = std::min(n - 1, i + 2);
            for (int j = jlo; j <= jhi; ++j) {
                double prod = 0.0;
                for (int k = std::max(0, i - 1); k <= std::min(n - 1, i + 1); ++k) {
                    const double aik = Aat(i, k);
                    if (aik == 0.0) continue;
                    double xkj = eps * Aat(k, j);
                    if (k == j)
                        xkj += ctx.a[static_cast<size_t>(k)] - ctx.potential.pi_lipschitz + stab;
                    prod += aik * xkj;
                }
                double m = dt * prod;
                if (i == j) m += 1.0 + eps * Aat(i, i);
                else m += eps * Aat(i, j);
                if (m != 0.0) M.at(i, j) = m;
            }
        }
        M.factor();

        ctx.ops->apply_A(S, rhs); // note: S still holds S(phi^n)
        delta = rhs;
        for (double& x : delta) x *= -dt;
        M.solve(delta);

        phi_prev = phi;
        for (int i = 0; i < n; ++i) phi[static_cast<size_t>(i)] += delta[static_cast<size_t>(i)];
        check_finite(phi, step, "phi");

        compute_S_mu(phi);
        rec.step(step, phi, mu, phi_prev, mu, 0.0);
    }
    return tr;
}

} // namespace

Trajectory solve(const SimConfig& cfg) { return solve(cfg, make_context(cfg)); }

Trajectory solve(const SimConfig& cfg, const SimContext& ctx) {
    cfg.validate();
    Field phi0 = initial_field(cfg, ctx);
    if (!phi0.all_finite()) throw NumericalAbort(0, "non-finite initial condition");

    if (cfg.scheme == Scheme::Rk4) {
        const double guard = rk4_guard_dt(cfg);
        if (cfg.dt > guard) {
            throw std::invalid_argument(
                "config: dt = " + std::to_string(cfg.dt) + " exceeds the RK4 stability guard 2/K = " +
                std::to_string(guard) + " (assembled Lipschitz constant K = " +
                std::to_string(lipschitz_K(cfg)) + ")");
        }
        if (cfg.level() == Level::PepsLambda) return integrate_rk4_P_eps_lambda(cfg, ctx, std::move(phi0));
        return integrate_rk4_P_eps(cfg, ctx, std::move(phi0));
    }
    return integrate_semi_implicit(cfg, ctx, std::move(phi0));
}

std::vector<std::pair<std::string, double>> AprioriReport::quantities() const {
    return {
        {"sup_phi_H2", sup_phi_H2},
        {"eps_sup_phi_V2", eps_sup_phi_V2},
        {"int_mu_V2", int_mu_V2},
        {"eps_int_Aphi2", eps_int_Aphi2},
        {"eps_int_dtphi2", eps_int_dtphi2},
        {"int_phi_V2", int_phi_V2},
        {"int_dtphi_Vstar2", int_dtphi_Vstar2},
        {"int_beta2", int_beta2},
    };
}

bool AprioriReport::all_finite() const {
    for (const auto& [name, value] : quantities())
        if (!std::isfinite(value)) return false;
    return std::isfinite(lambda2_int_dtmu2);
}

AprioriReport check_apriori(const Trajectory& traj, double eps) {
    AprioriReport r;
    for (double x : traj.norm_phi_H2) r.sup_phi_H2 = std::max(r.sup_phi_H2, x);
    for (double x : traj.norm_phi_V2) r.eps_sup_phi_V2 = std::max(r.eps_sup_phi_V2, eps * x);
    r.int_mu_V2 = traj.int_mu_V2.back();
    r.eps_int_Aphi2 = traj.eps_int_Aphi2.back();
    r.eps_int_dtphi2 = traj.eps_int_dtphi2.back();
    r.int_phi_V2 = traj.int_phi_V2.back();
    r.int_dtphi_Vstar2 = traj.int_dtphi_Vstar2.back();
    r.int_beta2 = traj.int_beta2.back();
    r.lambda2_int_dtmu2 = traj.lambda2_int_dtmu2.back();
    return r;
}

} // namespace nlch
