// The interaction kernel J, the field a(x) = int_Omega J(x - y) dy, and the
// convolution J * phi restricted to the symmetric exterior domain.
#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "nlch/grid.hpp"

namespace nlch {

/// Gaussian kernel J(x) = c_J * exp(-x^2); even and nonnegative by
/// construction, so a(x) >= 0.
struct KernelSpec {
    double c_J = 1.0;
    double eval(double x) const;
    double l1_mass() const; // c_J * sqrt(pi) in 1-D
};

double kernel_mass(const KernelSpec& spec);

enum class AMethod { Closed, Quadrature };
enum class ConvPath { Dense, Fast };

// Closed form of a(x) for the untruncated exterior domain:
//   a(x) = c_J sqrt(pi) - (c_J sqrt(pi)/2) [erf(x + eta) - erf(x - eta)].
// Quadrature form is J*1 with the grid weights, identical to convolve(1).
Field compute_a(const KernelSpec& spec, const DomainPtr& dom, AMethod method);

// (J * u)(x_i) = sum_j w_j [J(x_i - x_j) + J(x_i + x_j)] u_j; the mirror
// term realizes the second ray. Dense path is a precomputed matrix-vector
// product; the fast path splits the kernel matrix into Toeplitz + Hankel
// parts applied via one FFT circulant embedding.
class ConvolutionOperator {
  public:
    ConvolutionOperator(const KernelSpec& spec, DomainPtr dom);

    Field apply(const Field& u, ConvPath path = ConvPath::Dense) const;
    void apply(const std::vector<double>& u, std::vector<double>& out, ConvPath path) const;

    /// J*1 computed with the given path (bitwise-consistent with apply).
    const Field& a_quad(ConvPath path = ConvPath::Dense) const;

    const KernelSpec& spec() const { return spec_; }
    const DomainPtr& domain() const { return dom_; }

  private:
    void apply_dense(const std::vector<double>& u, std::vector<double>& out) const;
    void apply_fast(const std::vector<double>& u, std::vector<double>& out) const;

    KernelSpec spec_;
    DomainPtr dom_;
    std::vector<double> matrix_; // row-major [J(xi-xj)+J(xi+xj)] * w_j
    Field a_quad_dense_;
    Field a_quad_fast_;

    // fast path: spectra of the Toeplitz / Hankel circulant generators and
    // the phase that turns conj(X) into the reversed-input spectrum
    std::size_t pad_ = 0;
    std::vector<std::complex<double>> spec_toeplitz_;
    std::vector<std::complex<double>> spec_hankel_;
    std::vector<std::complex<double>> reverse_phase_;
};

using LinearMap = std::function<Field(const Field&)>;

/// Checks (T u, v)_H == (u, T v)_H on random pairs to `rel_tol` relative.
bool operator_symmetry_check(const DomainPtr& dom, const LinearMap& op, int pairs,
                             unsigned seed, double rel_tol = 1e-12);

bool convolution_symmetry_check(const ConvolutionOperator& op, int pairs, unsigned seed);

} // namespace nlch
