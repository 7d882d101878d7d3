#include "nlch/potential.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nlch {

namespace {
double q_betahat(double r) { return r * r * r * r; }
double q_beta(double r) { return 4.0 * r * r * r; }
double q_beta_prime(double r) { return 12.0 * r * r; }
double q_pihat(double r) { return -2.0 * r * r; }
double q_pi(double r) { return -4.0 * r; }
} // namespace

PotentialSpec quartic_potential() {
    PotentialSpec p;
    p.betahat = q_betahat;
    p.beta = q_beta;
    p.beta_prime = q_beta_prime;
    p.pihat = q_pihat;
    p.pi = q_pi;
    p.pi_lipschitz = 4.0;
    return p;
}

RegularizedPotential::RegularizedPotential(const PotentialSpec& spec, double eps)
    : spec_(spec), eps_(eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("RegularizedPotential: eps must be positive");
}

double RegularizedPotential::resolvent(double r) const {
    if (r == 0.0) return 0.0; // beta(0) = 0
    // f(s) = s + eps*beta(s) - r is strictly increasing; the root lies
    // between 0 and r. Newton from s = r / (1 + eps*beta'(r)-ish guess),
    // falling back to bisection whenever a step leaves the bracket.
    double lo = std::min(0.0, r), hi = std::max(0.0, r);
    double s = r / (1.0 + 4.0 * eps_ * r * r);
    if (s < lo || s > hi) s = 0.5 * (lo + hi);
    // iterate to machine precision; the contract only needs 1e-13 * (1+|r|),
    // but the energy diagnostics benefit from the extra digits
    const double tol = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(r));
    for (int it = 0; it < 200; ++it) {
        const double f = s + eps_ * spec_.beta(s) - r;
        if (std::fabs(f) <= tol) return s;
        if (f > 0.0) hi = s; else lo = s;
        const double fp = 1.0 + eps_ * spec_.beta_prime(s);
        double next = s - f / fp;
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
        if (next == s) return s; // stagnated at round-off
        s = next;
    }
    return s;
}

double RegularizedPotential::yosida(double r) const { return (r - resolvent(r)) / eps_; }

double RegularizedPotential::envelope(double r) const {
    const double j = resolvent(r);
    const double d = r - j;
    return 0.5 * d * d / eps_ + spec_.betahat(j);
}

} // namespace nlch
