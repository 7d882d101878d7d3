#include "nlch/kernel.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "nlch/fft.hpp"

namespace nlch {

double KernelSpec::eval(double x) const { return c_J * std::exp(-x * x); }

double KernelSpec::l1_mass() const { return c_J * std::sqrt(std::numbers::pi); }

double kernel_mass(const KernelSpec& spec) {
    if (!(spec.c_J > 0.0)) throw std::invalid_argument("kernel_mass: c_J must be positive");
    return spec.l1_mass();
}

Field compute_a(const KernelSpec& spec, const DomainPtr& dom, AMethod method) {
    if (method == AMethod::Quadrature) {
        ConvolutionOperator op(spec, dom);
        return op.a_quad(ConvPath::Dense);
    }
    Field a = Field::zeros(dom);
    const double mass = spec.l1_mass();
    const double half = 0.5 * mass;
    for (int i = 0; i < dom->n; ++i) {
        const double x = dom->nodes[static_cast<size_t>(i)];
        a[i] = mass - half * (std::erf(x + dom->eta) - std::erf(x - dom->eta));
    }
    return a;
}

ConvolutionOperator::ConvolutionOperator(const KernelSpec& spec, DomainPtr dom)
    : spec_(spec), dom_(std::move(dom)) {
    const int n = dom_->n;
    const auto& x = dom_->nodes;
    const auto& w = dom_->weights;

    matrix_.resize(static_cast<size_t>(n) * static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double* row = matrix_.data() + static_cast<size_t>(i) * static_cast<size_t>(n);
        for (int j = 0; j < n; ++j) {
            const double xi = x[static_cast<size_t>(i)], xj = x[static_cast<size_t>(j)];
            row[j] = (spec_.eval(xi - xj) + spec_.eval(xi + xj)) * w[static_cast<size_t>(j)];
        }
    }

    // Circulant embedding. Toeplitz generator t_d = J(d*h); Hankel part
    // H_{ij} = J(2 eta + (i+j) h) applied as a Toeplitz against the
    // reversed input, with generator g_d = J(2 eta + (n-1+d) h).
    const size_t m = static_cast<size_t>(2 * n - 1);
    pad_ = detail::next_pow2(m);
    std::vector<std::complex<double>> ct(pad_, 0.0), ch(pad_, 0.0);
    for (int d = 0; d < n; ++d) {
        const double t = spec_.eval(static_cast<double>(d) * dom_->h);
        ct[static_cast<size_t>(d)] = t;
        if (d > 0) ct[pad_ - static_cast<size_t>(d)] = t;
        const double gp = spec_.eval(2.0 * dom_->eta + static_cast<double>(n - 1 + d) * dom_->h);
        ch[static_cast<size_t>(d)] = gp;
        if (d > 0) {
            const double gm = spec_.eval(2.0 * dom_->eta + static_cast<double>(n - 1 - d) * dom_->h);
            ch[pad_ - static_cast<size_t>(d)] = gm;
        }
    }
    detail::fft(ct, false);
    detail::fft(ch, false);
    spec_toeplitz_ = std::move(ct);
    spec_hankel_ = std::move(ch);

    reverse_phase_.resize(pad_);
    const double ang0 = -2.0 * std::numbers::pi * static_cast<double>(n - 1) / static_cast<double>(pad_);
    for (size_t k = 0; k < pad_; ++k) {
        const double a = ang0 * static_cast<double>(k);
        reverse_phase_[k] = std::complex<double>(std::cos(a), std::sin(a));
    }

    std::vector<double> ones(static_cast<size_t>(n), 1.0), aq(static_cast<size_t>(n));
    apply_dense(ones, aq);
    a_quad_dense_ = Field(dom_, aq);
    apply_fast(ones, aq);
    a_quad_fast_ = Field(dom_, std::move(aq));
}

void ConvolutionOperator::apply_dense(const std::vector<double>& u, std::vector<double>& out) const {
    const int n = dom_->n;
    out.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double* row = matrix_.data() + static_cast<size_t>(i) * static_cast<size_t>(n);
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += row[j] * u[static_cast<size_t>(j)];
        out[static_cast<size_t>(i)] = s;
    }
}

void ConvolutionOperator::apply_fast(const std::vector<double>& u, std::vector<double>& out) const {
    const int n = dom_->n;
    const auto& w = dom_->weights;
    std::vector<std::complex<double>> z(pad_, 0.0);
    for (int j = 0; j < n; ++j)
        z[static_cast<size_t>(j)] = u[static_cast<size_t>(j)] * w[static_cast<size_t>(j)];
    detail::fft(z, false);
    std::vector<std::complex<double>> y(pad_);
    for (size_t k = 0; k < pad_; ++k) {
        const std::complex<double> xrev = std::conj(z[k]) * reverse_phase_[k];
        y[k] = spec_toeplitz_[k] * z[k] + spec_hankel_[k] * xrev;
    }
    detail::fft(y, true);
    out.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = y[static_cast<size_t>(i)].real();
}

void ConvolutionOperator::apply(const std::vector<double>& u, std::vector<double>& out,
                                ConvPath path) const {
    if (path == ConvPath::Dense)
        apply_dense(u, out);
    else
        apply_fast(u, out);
}

Field ConvolutionOperator::apply(const Field& u, ConvPath path) const {
    if (!u.dom->same_as(*dom_))
        throw std::invalid_argument("convolve: field domain does not match operator domain");
    std::vector<double> out;
    apply(u.v, out, path);
    return Field(dom_, std::move(out));
}

const Field& ConvolutionOperator::a_quad(ConvPath path) const {
    return path == ConvPath::Dense ? a_quad_dense_ : a_quad_fast_;
}

bool operator_symmetry_check(const DomainPtr& dom, const LinearMap& op, int pairs,
                             unsigned seed, double rel_tol) {
    std::mt19937_64 rng(seed);
    auto draw = [&rng, &dom]() {
        Field f = Field::zeros(dom);
        for (auto& x : f.v) x = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
        return f;
    };
    for (int p = 0; p < pairs; ++p) {
        const Field u = draw(), v = draw();
        const double lhs = inner_H(op(u), v);
        const double rhs = inner_H(u, op(v));
        const double scale = std::max({std::fabs(lhs), std::fabs(rhs), 1e-300});
        if (std::fabs(lhs - rhs) > rel_tol * scale) return false;
    }
    return true;
}

bool convolution_symmetry_check(const ConvolutionOperator& op, int pairs, unsigned seed) {
    return operator_symmetry_check(
        op.domain(), [&op](const Field& f) { return op.apply(f, ConvPath::Dense); }, pairs, seed);
}

} // namespace nlch
