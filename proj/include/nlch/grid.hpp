// Discretization of the symmetric exterior domain R \ (-eta, eta) as a
// single uniform segment [eta, eta + L] with reflecting truncation. The
// mirrored ray (-inf, -eta] is carried by a symmetry factor of 2 in every
// inner product.
#pragma once

#include <memory>
#include <vector>

namespace nlch {

struct Domain1D {
    double eta = 0.0;    // inner radius of the excluded ball
    double length = 0.0; // L, truncation length
    int n = 0;           // node count
    double h = 0.0;      // L / (n - 1)
    std::vector<double> nodes;   // x_i = eta + i*h
    std::vector<double> weights; // trapezoid: h/2 at the ends, h inside
    static constexpr double symmetry_factor = 2.0;

    bool same_as(const Domain1D& o) const {
        return n == o.n && eta == o.eta && length == o.length;
    }
};

using DomainPtr = std::shared_ptr<const Domain1D>;

/// Throws std::invalid_argument unless eta > 0, L > 0, n >= 3.
DomainPtr make_domain(double eta, double L, int n);

/// Grid function on a Domain1D. Arithmetic requires identical domains.
struct Field {
    DomainPtr dom;
    std::vector<double> v;

    Field() = default;
    Field(DomainPtr d, std::vector<double> values);

    static Field zeros(const DomainPtr& d);
    static Field constant(const DomainPtr& d, double c);

    int size() const { return dom ? dom->n : 0; }
    double& operator[](int i) { return v[static_cast<size_t>(i)]; }
    double operator[](int i) const { return v[static_cast<size_t>(i)]; }
    bool all_finite() const;
};

/// Throws std::invalid_argument on domain mismatch.
void require_same_domain(const Field& a, const Field& b);

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(double s, const Field& a);
Field pointwise(const Field& a, const Field& b);

// (u, v)_H = 2 * sum_i w_i u_i v_i  (both rays of the exterior domain)
double inner_H(const Field& u, const Field& v);
double norm_H(const Field& u);

// (u, v)_V = (u, v)_H + 2 * sum of cell-midpoint gradient products.
// The gradient part lives on cell midpoints so that
//   (u, v)_V == inner_H(A u, v)  exactly,  A = -lap + 1,
// the discrete statement of <F v1, v2> = (v1, v2)_V.
double inner_V(const Field& u, const Field& v);
double norm_V(const Field& u);

// Raw-vector kernels for hot paths. `w` are the domain weights.
double weighted_dot(const std::vector<double>& w, const std::vector<double>& a,
                    const std::vector<double>& b);

} // namespace nlch
