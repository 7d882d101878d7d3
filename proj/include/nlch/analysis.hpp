// Energy functional and balance residuals, assumption validation, and the
// convergence studies: eps-sweeps against a direct limit-problem run,
// lambda-sweeps against a direct (P)_eps run, and the pairwise Cauchy table.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlch/dynamics.hpp"

namespace nlch {

/// Nonlocal free energy of a state. The limit level uses G; passing eps
/// selects G_eps and adds the (eps/2)||phi||_V^2 Lyapunov part.
double energy(const SimContext& ctx, const Field& phi);
double energy(const SimContext& ctx, const Field& phi, double eps);

/// O(n^2) double-quadrature form (1/4 iint J (phi(x)-phi(y))^2 + potential);
/// must agree with the a_quad form to 1e-10 relative.
double energy_pair_form(const SimContext& ctx, const Field& phi,
                        std::optional<double> eps = std::nullopt);

struct EnergyReport {
    std::vector<double> times;
    std::vector<double> energy;   // E (Lyapunov functional for eps > 0 runs)
    std::vector<double> residual; // r(t) = E(t) + dissipation - E(0)
    double max_abs_residual = 0.0;
    double max_step_increase = 0.0; // most positive per-step energy change
};

EnergyReport energy_balance(const Trajectory& traj);

struct AssumptionReport {
    double j_l1 = 0.0;
    double min_a_closed = 0.0;
    double c0 = 16.0, c1 = 6.0;
    double c2 = 0.0; // sup over the eps grid of the (A8) quantities
    double c3 = 0.0; // ||phi0||_H^2, the V* mollifier-rate constant
    double mollifier_vstar_ratio_max = 0.0;

    bool a1_kernel = false;
    bool a2_split = false;
    bool a3_beta = false;
    bool a4_pi = false;
    bool a5_lower_bound = false;
    bool a6_envelope = false;
    bool a7_mass = false;
    bool a7_inf_a = false;
    bool a8_initial_data = false;

    bool pass() const;
    std::vector<std::pair<std::string, bool>> booleans() const;
};

/// Checks (A1)-(A8) for the given kernel/potential/domain, measuring the
/// (A8) constants on the supplied initial datum over eps in {1e-1..1e-4}.
AssumptionReport validate_assumptions(const KernelSpec& kernel, const PotentialSpec& potential,
                                      const DomainPtr& dom, const Field& phi0);

enum class EpsReference { DirectP, SmallestEps };

struct ConvergencePoint {
    double param = 0.0;
    double err_Vstar_sq = 0.0; // max_t ||diff||_{V*}^2 over snapshots
    double err_L2H_sq = 0.0;   // trapezoid of ||diff||_H^2 over snapshots
    double total = 0.0;
    double lambda2_int_dtmu2 = 0.0; // lambda sweeps only
};

struct CauchyPair {
    double eps = 0.0, gamma = 0.0;
    double vstar_sq = 0.0; // max_t ||phi_eps - phi_gamma||_{V*}^2
    double l2h_sq = 0.0;   // time-integrated squared H distance
    double d = 0.0;        // total squared distance
    double denom = 0.0;    // sqrt(eps) + sqrt(gamma) + ||phi0e - phi0g||_{V*}^2
};

struct ConvergenceReport {
    std::vector<ConvergencePoint> points;
    double fitted_p = 0.0;  // least-squares slope of log e vs log param
    double fitted_C = 0.0;  // least-squares constant
    double cover_C = 0.0;   // smallest C with e <= C sqrt(param) on the grid
    bool fit_valid = false;
    bool monotone = true;          // e decreasing with the parameter (10% slack)
    bool flagged_degenerate = false;
    bool dropped_largest = false;  // largest parameter left out of the fit

    std::vector<CauchyPair> pairs; // cauchy_table only
    double cauchy_C = 0.0;         // smallest C covering all pairs
};

// Sweep drivers. Runs share the snapshot grid (n_snapshots intervals of
// [0, T]); each run's dt divides the snapshot interval and respects the RK4
// guard. Runs execute concurrently when threads > 1.
ConvergenceReport converge_eps(const SimConfig& base, const std::vector<double>& eps_list,
                               EpsReference reference, int n_snapshots = 50, int threads = 1);
ConvergenceReport converge_lambda(const SimConfig& base, const std::vector<double>& lambda_list,
                                  int n_snapshots = 50, int threads = 1);
ConvergenceReport cauchy_table(const SimConfig& base, const std::vector<double>& eps_list,
                               int n_snapshots = 50, int threads = 1);

/// log-log least squares fit e = C * param^p; returns {p, C}.
std::pair<double, double> fit_loglog(const std::vector<double>& params,
                                     const std::vector<double>& errors);

} // namespace nlch
