// Independent brute-force references used by property tests and the
// oracle-selftest command: grid minimization of the Moreau-Yosida envelope,
// a dense spectral route for the resolvent operators, and high-accuracy
// tiny-step reference trajectories. Each oracle is a different algorithm
// from the code path it validates, not a refactor of it.
#pragma once

#include <string>
#include <vector>

#include "nlch/dynamics.hpp"
#include "nlch/grid.hpp"
#include "nlch/operators.hpp"
#include "nlch/potential.hpp"

namespace nlch::oracle {

struct OracleBudget {
    int s_grid = 100000; // envelope minimization grid resolution
    int eigen_cap = 512; // refuse eigendecompositions above this size
    int dt_divisor = 16; // reference trajectories run at dt / divisor
};

/// inf_s { (1/2eps)|r - s|^2 + betahat(s) } by scanning a uniform s-grid on
/// [-2|r|-1, 2|r|+1] and polishing the best cell with one Newton step.
double envelope_bruteforce(const PotentialSpec& spec, double eps, double r,
                           const OracleBudget& budget = {});

/// Full symmetric eigendecomposition of the discrete -lap (via the
/// similarity transform W^{1/2} L W^{-1/2}), eigenvectors orthonormal in
/// the H inner product. Throws std::invalid_argument above the size cap.
class DenseEigenReference {
  public:
    DenseEigenReference(DomainPtr dom, const OracleBudget& budget = {});

    const std::vector<double>& eigenvalues() const { return eigenvalues_; }
    const Field& eigenvector(int k) const { return eigenvectors_[static_cast<size_t>(k)]; }

    /// analytic discrete spectrum (2/h^2)(1 - cos(k pi h / L))
    double analytic_eigenvalue(int k) const;

    Field apply_J_lambda(double lambda, const Field& v) const;
    Field apply_yosida(double lambda, const Field& v) const;

  private:
    DomainPtr dom_;
    std::vector<double> eigenvalues_;
    std::vector<Field> eigenvectors_;
};

/// Same config at dt / divisor (snapshot stride scaled to keep the snapshot
/// times aligned); used as truth in scheme-order fits.
Trajectory reference_trajectory(const SimConfig& cfg, const OracleBudget& budget = {});

enum class FaultInjection { None, FlipConvolutionSign };

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct SelftestReport {
    std::vector<CheckResult> checks;
    bool all_pass() const;
};

/// Runs all oracle cross-checks at the given budgets. The fault hook lets
/// the harness verify that a broken fast convolution is actually caught.
SelftestReport selftest(const OracleBudget& budget = {},
                        FaultInjection fault = FaultInjection::None);

} // namespace nlch::oracle
