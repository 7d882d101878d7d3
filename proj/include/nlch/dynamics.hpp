// Time integration of the regularization cascade:
//   (P)_{eps,lambda}  globally Lipschitz coupled ODE system, classical RK4,
//   (P)_eps           reduced ODE dphi/dt = -A mu(phi), RK4 or semi-implicit,
//   (P)               stabilized linearly-implicit scheme (eps = 0).
#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlch/grid.hpp"
#include "nlch/kernel.hpp"
#include "nlch/operators.hpp"
#include "nlch/potential.hpp"

namespace nlch {

enum class Scheme { Rk4, SemiImplicit };
enum class Level { P, Peps, PepsLambda };

enum class InitialKind { TanhFront, GaussianBump, RandomSym, Constant, Mollified };

struct InitialCondition {
    InitialKind kind = InitialKind::TanhFront;
    InitialKind base = InitialKind::TanhFront; // used when kind == Mollified
    double amplitude = 1.0;
    unsigned long long seed = 0;
};

struct SimConfig {
    // domain + kernel (benchmark preset by default)
    double eta = 0.04;
    double L = 12.0;
    int n = 481;
    double c_J = 11.847981254502884; // calibrated so ||J||_L1 = 21

    double eps = 0.0;             // 0 selects the limit problem (P)
    std::optional<double> lambda; // present only for (P)_{eps,lambda}
    double T = 0.5;
    double dt = 1e-4;
    Scheme scheme = Scheme::SemiImplicit;
    InitialCondition ic;
    int snapshot_stride = 10;
    ConvPath convolution = ConvPath::Dense;

    Level level() const;
    void validate() const; // throws std::invalid_argument
};

/// Non-finite field during integration; carries the offending step.
struct NumericalAbort : std::runtime_error {
    int step;
    NumericalAbort(int step_, const std::string& msg)
        : std::runtime_error(msg), step(step_) {}
};

struct Trajectory {
    double dt = 0.0; // actual step (config dt rounded to divide T)
    int steps = 0;

    // full-field snapshots every snapshot_stride steps (plus the final step)
    std::vector<double> times;
    std::vector<int> snap_steps;
    std::vector<std::vector<double>> phi;
    std::vector<std::vector<double>> mu;

    // per-step diagnostic series, length steps + 1
    std::vector<double> step_times;
    std::vector<double> norm_phi_H2, norm_phi_V2, norm_mu_V2;
    std::vector<double> energy;   // level energy (Lyapunov functional if eps > 0)
    std::vector<double> residual; // energy balance residual, r(0) = 0

    // cumulative integrals at step times
    std::vector<double> int_mu_V2;         // trapezoid in t
    std::vector<double> diss_quad;         // scheme-consistent dissipation quadrature
    std::vector<double> int_phi_V2;
    std::vector<double> int_dtphi_Vstar2;
    std::vector<double> int_beta2;         // beta_eps (or beta for (P)) in H
    std::vector<double> eps_int_Aphi2;
    std::vector<double> eps_int_dtphi2;
    std::vector<double> lambda2_int_dtmu2; // (P)_{eps,lambda} runs
};

struct AprioriReport {
    double sup_phi_H2 = 0.0;
    double eps_sup_phi_V2 = 0.0;
    double int_mu_V2 = 0.0;
    double eps_int_Aphi2 = 0.0;
    double eps_int_dtphi2 = 0.0;
    double int_phi_V2 = 0.0;
    double int_dtphi_Vstar2 = 0.0;
    double int_beta2 = 0.0;
    double lambda2_int_dtmu2 = 0.0;

    std::vector<std::pair<std::string, double>> quantities() const;
    bool all_finite() const;
};

/// Immutable per-experiment machinery, shareable across concurrent runs.
struct SimContext {
    DomainPtr dom;
    KernelSpec kernel;
    PotentialSpec potential;
    std::shared_ptr<const ConvolutionOperator> conv;
    std::shared_ptr<const EllipticOps> ops;
    ConvPath path = ConvPath::Dense;
    std::vector<double> a; // J*1 on the configured path (bitwise convolve-consistent)
    double a_max = 0.0;
};

SimContext make_context(const SimConfig& cfg);

Field initial_field(const SimConfig& cfg, const SimContext& ctx);

/// The configured initial datum before any mollification (phi0 itself).
Field raw_initial_field(const SimConfig& cfg, const DomainPtr& dom);

/// phi_{0eps} = (I + eps A)^{-1} phi0. Satisfies ||phi_{0eps}||_H <= ||phi0||_H
/// and ||phi_{0eps} - phi0||_{V*} <= eps^{1/2} ||phi0||_H.
Field mollify_initial(const EllipticOps& ops, double eps, const Field& phi0);

/// mu for the reduced (P)_eps flow, obtained by eliminating dphi/dt = -A mu:
/// mu = (I + eps A)^{-1} [eps A phi + a phi - J*phi + G_eps'(phi)].
Field mu_of_phi_P_eps(const SimContext& ctx, double eps, const Field& phi);

/// Right-hand side of the coupled ODE system for (P)_{eps,lambda}.
void rhs_P_eps_lambda(const SimContext& ctx, const RegularizedPotential& reg, double lambda,
                      const std::vector<double>& phi, const std::vector<double>& mu,
                      std::vector<double>& dphi, std::vector<double>& dmu);

// Lipschitz constants assembled from the discrete operator norms
// (||(-lap)_lam|| <= mu_max/(1+lam mu_max), ||a.||_inf, ||J||_L1,
//  1/eps + ||pi'||_inf) and the RK4 step guard dt <= 2/K.
double lipschitz_K(const SimConfig& cfg);
double rk4_guard_dt(const SimConfig& cfg);

Trajectory solve(const SimConfig& cfg);
Trajectory solve(const SimConfig& cfg, const SimContext& ctx);

AprioriReport check_apriori(const Trajectory& traj, double eps);

/// Level energy of a state: the nonlocal pair term via a_quad plus the
/// potential term; reg == nullptr selects G, otherwise G_eps. The (eps/2)
/// ||phi||_V^2 Lyapunov part is added by `lyapunov_value`.
double energy_value(const SimContext& ctx, const std::vector<double>& phi,
                    const RegularizedPotential* reg);
double lyapunov_value(const SimContext& ctx, const std::vector<double>& phi,
                      const RegularizedPotential* reg);

// raw-vector inner products against a domain (hot-path variants)
double inner_H_raw(const Domain1D& d, const std::vector<double>& a, const std::vector<double>& b);
double inner_V_raw(const Domain1D& d, const std::vector<double>& a, const std::vector<double>& b);

} // namespace nlch
