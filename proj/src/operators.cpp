#include "nlch/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace nlch {

TridiagFactor::TridiagFactor(const std::vector<double>& lower, const std::vector<double>& diag,
                             const std::vector<double>& upper) {
    const size_t n = diag.size();
    mult_.assign(n, 0.0);
    piv_ = diag;
    up_ = upper;
    for (size_t i = 1; i < n; ++i) {
        if (piv_[i - 1] == 0.0) throw std::runtime_error("TridiagFactor: zero pivot");
        mult_[i] = lower[i - 1] / piv_[i - 1];
        piv_[i] = diag[i] - mult_[i] * up_[i - 1];
    }
    if (piv_[n - 1] == 0.0) throw std::runtime_error("TridiagFactor: zero pivot");
}

void TridiagFactor::solve(const std::vector<double>& rhs, std::vector<double>& x) const {
    const size_t n = piv_.size();
    x.resize(n);
    x[0] = rhs[0];
    for (size_t i = 1; i < n; ++i) x[i] = rhs[i] - mult_[i] * x[i - 1];
    x[n - 1] /= piv_[n - 1];
    for (size_t i = n - 1; i-- > 0;) x[i] = (x[i] - up_[i] * x[i + 1]) / piv_[i];
}

BandedFactor::BandedFactor(int n, int kl, int ku)
    : n_(n), kl_(kl), ku_(ku), ld_(2 * kl + ku + 1),
      ab_(static_cast<size_t>(ld_) * static_cast<size_t>(n), 0.0), ipiv_(static_cast<size_t>(n), 0) {}

double& BandedFactor::at(int i, int j) {
    return ab_[static_cast<size_t>(kl_ + ku_ + i - j) + static_cast<size_t>(j) * static_cast<size_t>(ld_)];
}

void BandedFactor::factor() {
    auto m = [this](int i, int j) -> double& { return at(i, j); };
    for (int j = 0; j < n_; ++j) {
        const int ilast = std::min(j + kl_, n_ - 1);
        int jp = j;
        double best = std::fabs(m(j, j));
        for (int i = j + 1; i <= ilast; ++i)
            if (std::fabs(m(i, j)) > best) { best = std::fabs(m(i, j)); jp = i; }
        ipiv_[static_cast<size_t>(j)] = jp;
        if (best == 0.0) throw std::runtime_error("BandedFactor: singular matrix");
        const int clast = std::min(j + kl_ + ku_, n_ - 1);
        if (jp != j)
            for (int c = j; c <= clast; ++c) std::swap(m(j, c), m(jp, c));
        for (int i = j + 1; i <= ilast; ++i) {
            const double l = m(i, j) / m(j, j);
            m(i, j) = l;
            for (int c = j + 1; c <= clast; ++c) m(i, c) -= l * m(j, c);
        }
    }
    factored_ = true;
}

void BandedFactor::solve(std::vector<double>& b) const {
    if (!factored_) throw std::logic_error("BandedFactor: solve before factor");
    auto m = [this](int i, int j) -> double {
        return ab_[static_cast<size_t>(kl_ + ku_ + i - j) + static_cast<size_t>(j) * static_cast<size_t>(ld_)];
    };
    for (int j = 0; j < n_; ++j) {
        const int jp = ipiv_[static_cast<size_t>(j)];
        if (jp != j) std::swap(b[static_cast<size_t>(j)], b[static_cast<size_t>(jp)]);
        const int ilast = std::min(j + kl_, n_ - 1);
        for (int i = j + 1; i <= ilast; ++i) b[static_cast<size_t>(i)] -= m(i, j) * b[static_cast<size_t>(j)];
    }
    for (int i = n_ - 1; i >= 0; --i) {
        const int clast = std::min(i + kl_ + ku_, n_ - 1);
        double s = b[static_cast<size_t>(i)];
        for (int c = i + 1; c <= clast; ++c) s -= m(i, c) * b[static_cast<size_t>(c)];
        b[static_cast<size_t>(i)] = s / m(i, i);
    }
}

EllipticOps::EllipticOps(DomainPtr dom, const std::vector<double>& lambdas,
                         const std::vector<double>& epsilons)
    : dom_(std::move(dom)) {
    const int n = dom_->n;
    const double ih2 = 1.0 / (dom_->h * dom_->h);
    lower_.assign(static_cast<size_t>(n - 1), -ih2);
    upper_.assign(static_cast<size_t>(n - 1), -ih2);
    diag_.assign(static_cast<size_t>(n), 2.0 * ih2);
    // reflecting ghost nodes double the first/last off-diagonal
    upper_.front() = -2.0 * ih2;
    lower_.back() = -2.0 * ih2;

    lam_cache_.emplace(1.0, build_lambda_factor(1.0)); // A^{-1} via J_1
    for (double lam : lambdas)
        if (lam > 0.0) lam_cache_.emplace(lam, build_lambda_factor(lam));
    for (double eps : epsilons)
        if (eps > 0.0) eps_cache_.emplace(eps, build_eps_factor(eps));
}

TridiagFactor EllipticOps::build_lambda_factor(double lam) const {
    const size_t n = diag_.size();
    std::vector<double> lo(n - 1), di(n), up(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        lo[i] = lam * lower_[i];
        up[i] = lam * upper_[i];
    }
    for (size_t i = 0; i < n; ++i) di[i] = 1.0 + lam * diag_[i];
    return TridiagFactor(lo, di, up);
}

TridiagFactor EllipticOps::build_eps_factor(double eps) const {
    // I + eps*A = (1 + eps) I + eps * (-lap)
    const size_t n = diag_.size();
    std::vector<double> lo(n - 1), di(n), up(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        lo[i] = eps * lower_[i];
        up[i] = eps * upper_[i];
    }
    for (size_t i = 0; i < n; ++i) di[i] = 1.0 + eps * (diag_[i] + 1.0);
    return TridiagFactor(lo, di, up);
}

const TridiagFactor* EllipticOps::cached_lambda(double lam) const {
    auto it = lam_cache_.find(lam);
    return it == lam_cache_.end() ? nullptr : &it->second;
}

const TridiagFactor* EllipticOps::cached_eps(double eps) const {
    auto it = eps_cache_.find(eps);
    return it == eps_cache_.end() ? nullptr : &it->second;
}

void EllipticOps::apply_neg_laplacian(const std::vector<double>& u, std::vector<double>& out) const {
    const size_t n = u.size();
    out.resize(n);
    out[0] = diag_[0] * u[0] + upper_[0] * u[1];
    for (size_t i = 1; i + 1 < n; ++i)
        out[i] = lower_[i - 1] * u[i - 1] + diag_[i] * u[i] + upper_[i] * u[i + 1];
    out[n - 1] = lower_[n - 2] * u[n - 2] + diag_[n - 1] * u[n - 1];
}

void EllipticOps::apply_A(const std::vector<double>& u, std::vector<double>& out) const {
    apply_neg_laplacian(u, out);
    for (size_t i = 0; i < u.size(); ++i) out[i] += u[i];
}

Field EllipticOps::apply_A(const Field& u) const {
    if (!u.dom->same_as(*dom_))
        throw std::invalid_argument("apply_A: field domain does not match operator domain");
    std::vector<double> out;
    apply_A(u.v, out);
    return Field(dom_, std::move(out));
}

void EllipticOps::resolvent_J_lambda(double lam, const std::vector<double>& v,
                                     std::vector<double>& x) const {
    if (!(lam > 0.0)) throw std::invalid_argument("resolvent_J_lambda: lambda must be positive");
    if (const TridiagFactor* f = cached_lambda(lam)) {
        f->solve(v, x);
    } else {
        build_lambda_factor(lam).solve(v, x);
    }
}

Field EllipticOps::resolvent_J_lambda(double lam, const Field& v) const {
    std::vector<double> x;
    resolvent_J_lambda(lam, v.v, x);
    return Field(dom_, std::move(x));
}

void EllipticOps::yosida_laplacian(double lam, const std::vector<double>& v,
                                   std::vector<double>& x) const {
    resolvent_J_lambda(lam, v, x);
    const double il = 1.0 / lam;
    for (size_t i = 0; i < v.size(); ++i) x[i] = (v[i] - x[i]) * il;
}

Field EllipticOps::yosida_laplacian(double lam, const Field& v) const {
    std::vector<double> x;
    yosida_laplacian(lam, v.v, x);
    return Field(dom_, std::move(x));
}

void EllipticOps::solve_I_plus_epsA(double eps, const std::vector<double>& v,
                                    std::vector<double>& x) const {
    if (!(eps > 0.0)) throw std::invalid_argument("solve_I_plus_epsA: eps must be positive");
    if (const TridiagFactor* f = cached_eps(eps)) {
        f->solve(v, x);
    } else {
        build_eps_factor(eps).solve(v, x);
    }
}

Field EllipticOps::solve_I_plus_epsA(double eps, const Field& v) const {
    std::vector<double> x;
    solve_I_plus_epsA(eps, v.v, x);
    return Field(dom_, std::move(x));
}

void EllipticOps::F_inverse(const std::vector<double>& v, std::vector<double>& x) const {
    resolvent_J_lambda(1.0, v, x); // A = I + 1 * (-lap)
}

Field EllipticOps::F_inverse(const Field& v) const {
    std::vector<double> x;
    F_inverse(v.v, x);
    return Field(dom_, std::move(x));
}

double EllipticOps::norm_Vstar(const Field& v) const {
    Field Ainv = F_inverse(v);
    return std::sqrt(std::max(0.0, inner_H(v, Ainv)));
}

} // namespace nlch
