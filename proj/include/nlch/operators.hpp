// Discrete Neumann operators on a Domain1D:
//   -lap        second-order FD with reflecting ghost nodes at both ends,
//   A = -lap+1  which is also the Riesz map F of (.,.)_V,
//   J_lam       = (I + lam * -lap)^{-1},
//   (-lap)_lam  = (I - J_lam) / lam   (Yosida approximation),
// plus the V* norm realized through A^{-1}.
#pragma once

#include <map>
#include <vector>

#include "nlch/grid.hpp"

namespace nlch {

/// Prefactored Thomas elimination for a diagonally dominant tridiagonal
/// matrix. solve() is const and reentrant.
class TridiagFactor {
  public:
    TridiagFactor() = default;
    TridiagFactor(const std::vector<double>& lower, const std::vector<double>& diag,
                  const std::vector<double>& upper);
    void solve(const std::vector<double>& rhs, std::vector<double>& x) const;
    int size() const { return static_cast<int>(piv_.size()); }

  private:
    std::vector<double> mult_, piv_, up_;
};

/// Banded LU with partial pivoting (LAPACK-style band storage). Used for
/// the pentadiagonal semi-implicit systems, which are not symmetric.
class BandedFactor {
  public:
    BandedFactor(int n, int kl, int ku);
    double& at(int i, int j); // assemble M(i, j) before factor()
    void factor();            // throws std::runtime_error on singularity
    void solve(std::vector<double>& b) const;

  private:
    int n_, kl_, ku_, ld_;
    std::vector<double> ab_;
    std::vector<int> ipiv_;
    bool factored_ = false;
};

class EllipticOps {
  public:
    /// Factorizations for the listed lambda / eps values (plus lambda = 1,
    /// which backs F^{-1}) are built up front; the object is immutable and
    /// reentrant afterwards. Other parameters are factored per call.
    explicit EllipticOps(DomainPtr dom, const std::vector<double>& lambdas = {},
                         const std::vector<double>& epsilons = {});

    const DomainPtr& domain() const { return dom_; }

    void apply_neg_laplacian(const std::vector<double>& u, std::vector<double>& out) const;
    void apply_A(const std::vector<double>& u, std::vector<double>& out) const;
    Field apply_A(const Field& u) const;

    /// Solves (I + lam * -lap) x = v.
    void resolvent_J_lambda(double lam, const std::vector<double>& v, std::vector<double>& x) const;
    Field resolvent_J_lambda(double lam, const Field& v) const;

    /// (v - J_lam v) / lam
    void yosida_laplacian(double lam, const std::vector<double>& v, std::vector<double>& x) const;
    Field yosida_laplacian(double lam, const Field& v) const;

    /// Solves (I + eps * A) x = v.
    void solve_I_plus_epsA(double eps, const std::vector<double>& v, std::vector<double>& x) const;
    Field solve_I_plus_epsA(double eps, const Field& v) const;

    /// Solves A x = v (constants are fixed points).
    Field F_inverse(const Field& v) const;
    void F_inverse(const std::vector<double>& v, std::vector<double>& x) const;

    /// ||v||_{V*} = (v, A^{-1} v)_H^{1/2} for v identified with an H element.
    double norm_Vstar(const Field& v) const;

    /// Largest eigenvalue of the discrete -lap: 4 / h^2 (mode k = n-1).
    double mu_max() const { return 4.0 / (dom_->h * dom_->h); }

    // Band accessors for schemes that assemble products of A.
    const std::vector<double>& lap_lower() const { return lower_; }
    const std::vector<double>& lap_diag() const { return diag_; }
    const std::vector<double>& lap_upper() const { return upper_; }

  private:
    TridiagFactor build_lambda_factor(double lam) const;
    TridiagFactor build_eps_factor(double eps) const;
    const TridiagFactor* cached_lambda(double lam) const;
    const TridiagFactor* cached_eps(double eps) const;

    DomainPtr dom_;
    std::vector<double> lower_, diag_, upper_; // bands of -lap
    std::map<double, TridiagFactor> lam_cache_;
    std::map<double, TridiagFactor> eps_cache_;
};

} // namespace nlch
