#include "nlch/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nlch {

DomainPtr make_domain(double eta, double L, int n) {
    if (!(eta > 0.0) || !(L > 0.0))
        throw std::invalid_argument("make_domain: eta and L must be positive");
    if (n < 3)
        throw std::invalid_argument("make_domain: need n >= 3, got " + std::to_string(n));

    auto d = std::make_shared<Domain1D>();
    d->eta = eta;
    d->length = L;
    d->n = n;
    d->h = L / static_cast<double>(n - 1);
    d->nodes.resize(static_cast<size_t>(n));
    d->weights.assign(static_cast<size_t>(n), d->h);
    for (int i = 0; i < n; ++i)
        d->nodes[static_cast<size_t>(i)] = eta + d->h * static_cast<double>(i);
    d->nodes.back() = eta + L; // pin the endpoint exactly
    d->weights.front() = 0.5 * d->h;
    d->weights.back() = 0.5 * d->h;
    return d;
}

Field::Field(DomainPtr d, std::vector<double> values) : dom(std::move(d)), v(std::move(values)) {
    if (!dom || static_cast<int>(v.size()) != dom->n)
        throw std::invalid_argument("Field: value size does not match domain");
}

Field Field::zeros(const DomainPtr& d) { return Field(d, std::vector<double>(static_cast<size_t>(d->n), 0.0)); }

Field Field::constant(const DomainPtr& d, double c) {
    return Field(d, std::vector<double>(static_cast<size_t>(d->n), c));
}

bool Field::all_finite() const {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void require_same_domain(const Field& a, const Field& b) {
    if (!a.dom || !b.dom || (a.dom != b.dom && !a.dom->same_as(*b.dom)))
        throw std::invalid_argument("fields live on different domains");
}

Field operator+(const Field& a, const Field& b) {
    require_same_domain(a, b);
    Field r = a;
    for (size_t i = 0; i < r.v.size(); ++i) r.v[i] += b.v[i];
    return r;
}

Field operator-(const Field& a, const Field& b) {
    require_same_domain(a, b);
    Field r = a;
    for (size_t i = 0; i < r.v.size(); ++i) r.v[i] -= b.v[i];
    return r;
}

Field operator*(double s, const Field& a) {
    Field r = a;
    for (double& x : r.v) x *= s;
    return r;
}

Field pointwise(const Field& a, const Field& b) {
    require_same_domain(a, b);
    Field r = a;
    for (size_t i = 0; i < r.v.size(); ++i) r.v[i] *= b.v[i];
    return r;
}

double weighted_dot(const std::vector<double>& w, const std::vector<double>& a,
                    const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < w.size(); ++i) s += w[i] * a[i] * b[i];
    return s;
}

double inner_H(const Field& u, const Field& v) {
    require_same_domain(u, v);
    return Domain1D::symmetry_factor * weighted_dot(u.dom->weights, u.v, v.v);
}

double norm_H(const Field& u) { return std::sqrt(inner_H(u, u)); }

double inner_V(const Field& u, const Field& v) {
    require_same_domain(u, v);
    const Domain1D& d = *u.dom;
    double grad = 0.0;
    for (int i = 0; i + 1 < d.n; ++i) {
        const double du = u.v[static_cast<size_t>(i + 1)] - u.v[static_cast<size_t>(i)];
        const double dv = v.v[static_cast<size_t>(i + 1)] - v.v[static_cast<size_t>(i)];
        grad += du * dv;
    }
    grad /= d.h; // sum of h * (du/h) * (dv/h)
    return Domain1D::symmetry_factor * grad + inner_H(u, v);
}

double norm_V(const Field& u) { return std::sqrt(inner_V(u, u)); }

} // namespace nlch
