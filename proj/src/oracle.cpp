#include "nlch/oracle.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "nlch/kernel.hpp"

namespace nlch::oracle {

double envelope_bruteforce(const PotentialSpec& spec, double eps, double r,
                           const OracleBudget& budget) {
    if (!(eps > 0.0)) throw std::invalid_argument("envelope_bruteforce: eps must be positive");
    const double half = 2.0 * std::fabs(r) + 1.0;
    const int m = budget.s_grid;
    const double ds = 2.0 * half / static_cast<double>(m - 1);
    auto objective = [&](double s) {
        const double d = r - s;
        return 0.5 * d * d / eps + spec.betahat(s);
    };
    double best_s = -half, best = objective(-half);
    for (int i = 1; i < m; ++i) {
        const double s = -half + ds * static_cast<double>(i);
        const double f = objective(s);
        if (f < best) {
            best = f;
            best_s = s;
        }
    }
    // one Newton polish on the stationarity equation (s - r)/eps + beta(s) = 0
    const double g = (best_s - r) / eps + spec.beta(best_s);
    const double gp = 1.0 / eps + spec.beta_prime(best_s);
    const double polished = best_s - g / gp;
    return std::min(best, objective(polished));
}

DenseEigenReference::DenseEigenReference(DomainPtr dom, const OracleBudget& budget)
    : dom_(std::move(dom)) {
    const int n = dom_->n;
    if (n > budget.eigen_cap)
        throw std::invalid_argument("DenseEigenReference: n = " + std::to_string(n) +
                                    " above the eigendecomposition cap " +
                                    std::to_string(budget.eigen_cap));

    // W^{1/2} L W^{-1/2} is genuinely symmetric tridiagonal
    EllipticOps ops(dom_);
    const auto& lo = ops.lap_lower();
    const auto& di = ops.lap_diag();
    const auto& up = ops.lap_upper();
    const auto& w = dom_->weights;

    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        S(i, i) = di[static_cast<size_t>(i)];
        if (i + 1 < n) {
            const double scale = std::sqrt(w[static_cast<size_t>(i)] / w[static_cast<size_t>(i + 1)]);
            S(i, i + 1) = up[static_cast<size_t>(i)] * scale;
            S(i + 1, i) = lo[static_cast<size_t>(i)] / scale;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("DenseEigenReference: eigensolver failed");

    eigenvalues_.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
    eigenvectors_.reserve(static_cast<size_t>(n));
    const double inv_sqrt_sym = 1.0 / std::sqrt(Domain1D::symmetry_factor);
    for (int k = 0; k < n; ++k) {
        Field v = Field::zeros(dom_);
        for (int i = 0; i < n; ++i)
            v[i] = es.eigenvectors()(i, k) / std::sqrt(w[static_cast<size_t>(i)]) * inv_sqrt_sym;
        eigenvectors_.push_back(std::move(v)); // inner_H(v_k, v_l) = delta_kl
    }
}

double DenseEigenReference::analytic_eigenvalue(int k) const {
    const double h = dom_->h;
    return 2.0 / (h * h) *
           (1.0 - std::cos(static_cast<double>(k) * std::numbers::pi * h / dom_->length));
}

Field DenseEigenReference::apply_J_lambda(double lambda, const Field& v) const {
    const int n = dom_->n;
    Field out = Field::zeros(dom_);
    for (int k = 0; k < n; ++k) {
        const double c = inner_H(v, eigenvectors_[static_cast<size_t>(k)]);
        const double f = c / (1.0 + lambda * eigenvalues_[static_cast<size_t>(k)]);
        for (int i = 0; i < n; ++i) out[i] += f * eigenvectors_[static_cast<size_t>(k)][i];
    }
    return out;
}

Field DenseEigenReference::apply_yosida(double lambda, const Field& v) const {
    const int n = dom_->n;
    Field out = Field::zeros(dom_);
    for (int k = 0; k < n; ++k) {
        const double mu = eigenvalues_[static_cast<size_t>(k)];
        const double c = inner_H(v, eigenvectors_[static_cast<size_t>(k)]);
        const double f = c * mu / (1.0 + lambda * mu);
        for (int i = 0; i < n; ++i) out[i] += f * eigenvectors_[static_cast<size_t>(k)][i];
    }
    return out;
}

Trajectory reference_trajectory(const SimConfig& cfg, const OracleBudget& budget) {
    SimConfig fine = cfg;
    fine.dt = cfg.dt / static_cast<double>(budget.dt_divisor);
    fine.snapshot_stride = cfg.snapshot_stride * budget.dt_divisor;
    return solve(fine);
}

bool SelftestReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

namespace {

CheckResult check_envelope(const OracleBudget& budget) {
    PotentialSpec spec = quartic_potential();
    std::mt19937_64 rng(101);
    auto u01 = [&rng]() { return double(rng() >> 11) * 0x1.0p-53; };
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const double eps = 1e-4 + u01() * (1.0 - 1e-4);
        const double r = 5.0 * (2.0 * u01() - 1.0);
        RegularizedPotential reg(spec, eps);
        worst = std::max(worst, std::fabs(envelope_bruteforce(spec, eps, r, budget) - reg.envelope(r)));
    }
    std::ostringstream os;
    os << "max |bruteforce - closed form| = " << worst;
    return {"moreau_yosida_envelope", worst <= 1e-8, os.str()};
}

CheckResult check_spectral(const OracleBudget& budget) {
    auto dom = make_domain(0.04, 12.0, std::min(256, budget.eigen_cap));
    DenseEigenReference ref(dom, budget);
    EllipticOps ops(dom, {1e-2});

    double spec_err = 0.0;
    for (int k = 0; k < dom->n; ++k) {
        const double a = ref.analytic_eigenvalue(k);
        const double scale = std::max(1.0, a);
        spec_err = std::max(spec_err, std::fabs(ref.eigenvalues()[static_cast<size_t>(k)] - a) / scale);
    }

    std::mt19937_64 rng(55);
    Field v = Field::zeros(dom);
    for (auto& x : v.v) x = 2.0 * (double(rng() >> 11) * 0x1.0p-53) - 1.0;
    const Field banded = ops.resolvent_J_lambda(1e-2, v);
    const Field spectral = ref.apply_J_lambda(1e-2, v);
    double app_err = 0.0;
    for (int i = 0; i < dom->n; ++i)
        app_err = std::max(app_err, std::fabs(banded[i] - spectral[i]));

    std::ostringstream os;
    os << "spectrum rel err = " << spec_err << ", J_lambda spectral vs banded = " << app_err;
    return {"elliptic_resolvent_spectral", spec_err <= 1e-9 && app_err <= 1e-10, os.str()};
}

CheckResult check_convolution(FaultInjection fault) {
    KernelSpec spec{11.847981254502884};
    auto dom = make_domain(0.04, 12.0, 256);
    ConvolutionOperator op(spec, dom);
    std::mt19937_64 rng(77);
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        Field u = Field::zeros(dom);
        for (auto& x : u.v) x = 2.0 * (double(rng() >> 11) * 0x1.0p-53) - 1.0;
        Field dense = op.apply(u, ConvPath::Dense);
        Field fast = op.apply(u, ConvPath::Fast);
        if (fault == FaultInjection::FlipConvolutionSign)
            for (auto& x : fast.v) x = -x;
        double scale = 0.0, err = 0.0;
        for (int i = 0; i < dom->n; ++i) {
            scale = std::max(scale, std::fabs(dense[i]));
            err = std::max(err, std::fabs(dense[i] - fast[i]));
        }
        worst = std::max(worst, err / scale);
    }
    std::ostringstream os;
    os << "fast vs dense convolution rel err = " << worst;
    return {"fast_convolution", worst <= 1e-12, os.str()};
}

CheckResult check_reference_trajectory() {
    SimConfig cfg;
    cfg.n = 65;
    cfg.eps = 1e-2;
    cfg.T = 1e-3;
    cfg.dt = 1e-4;
    cfg.scheme = Scheme::Rk4;
    cfg.ic.kind = InitialKind::TanhFront;
    cfg.snapshot_stride = 5;

    OracleBudget unit;
    unit.dt_divisor = 1;
    const Trajectory a = solve(cfg);
    const Trajectory b = reference_trajectory(cfg, unit);
    bool same = a.times == b.times && a.phi.size() == b.phi.size();
    if (same)
        for (size_t s = 0; s < a.phi.size(); ++s)
            if (a.phi[s] != b.phi[s]) same = false; // bitwise
    return {"reference_trajectory", same, same ? "divisor 1 reproduces solve() bitwise"
                                              : "divisor 1 mismatch"};
}

} // namespace

SelftestReport selftest(const OracleBudget& budget, FaultInjection fault) {
    SelftestReport report;
    report.checks.push_back(check_envelope(budget));
    report.checks.push_back(check_spectral(budget));
    report.checks.push_back(check_convolution(fault));
    report.checks.push_back(check_reference_trajectory());
    return report;
}

} // namespace nlch::oracle
