// Double-well potential split G = betahat + pihat (convex + smooth concave)
// and its Moreau-Yosida regularization G_eps = betahat_eps + pihat.
#pragma once

namespace nlch {

// Only the quartic family ships:
//   betahat(r) = r^4, beta(r) = 4 r^3, pihat(r) = -2 r^2, pi(r) = -4 r,
// but the contract stays pluggable: any monotone beta with evaluable
// betahat / beta / beta' works.
struct PotentialSpec {
    double (*betahat)(double) = nullptr;
    double (*beta)(double) = nullptr;
    double (*beta_prime)(double) = nullptr;
    double (*pihat)(double) = nullptr;
    double (*pi)(double) = nullptr;
    double pi_lipschitz = 0.0; // ||pi'||_inf

    double G(double r) const { return betahat(r) + pihat(r); }
    double G_prime(double r) const { return beta(r) + pi(r); }
};

PotentialSpec quartic_potential();

/// The pair (betahat, pihat) regularized at eps > 0.
class RegularizedPotential {
  public:
    RegularizedPotential(const PotentialSpec& spec, double eps);

    double eps() const { return eps_; }
    const PotentialSpec& spec() const { return spec_; }

    /// Unique s with s + eps * beta(s) = r: safeguarded Newton on the
    /// bracket [-|r|, |r|], |residual| <= 1e-13 * (1 + |r|).
    double resolvent(double r) const;
    /// beta_eps(r) = (r - resolvent(r)) / eps
    double yosida(double r) const;
    /// betahat_eps(r) = (1/2eps)|r - J(r)|^2 + betahat(J(r)), J = resolvent
    double envelope(double r) const;

    double G_eps(double r) const { return envelope(r) + spec_.pihat(r); }
    double G_eps_prime(double r) const { return yosida(r) + spec_.pi(r); }

  private:
    PotentialSpec spec_;
    double eps_;
};

} // namespace nlch
