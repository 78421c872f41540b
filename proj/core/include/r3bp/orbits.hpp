#ifndef R3BP_ORBITS_HPP
#define R3BP_ORBITS_HPP

#include <vector>

#include "r3bp/flow.hpp"
#include "r3bp/types.hpp"

namespace r3bp {

/// One member of the Lyapunov family, labeled by its left x-axis crossing.
struct LyapunovOrbit {
    double x_star = 0.0;   // left crossing of the orbit with the x-axis
    double kappa = 0.0;    // p_y at the crossing
    double period = 0.0;
    double energy = 0.0;

    State4 seed() const { return {x_star, 0.0, 0.0, kappa}; }
};

struct CorrectorConfig {
    int max_newton = 50;
    double residual_tol = 1e-12;  // on |pi_px P(q)|
    double continuation_step = 2e-3;
    FlowConfig flow;
};

/// x-coordinate of the collinear libration point between the primaries
/// (the one the Lyapunov family emanates from).
double libration_point_x(const SystemParams& p);

/// Symmetric shooting: Newton on p_y driving the half-turn p_x to zero.
/// The derivative comes from the variational flow; falls back to bisection
/// when a bracket is available.
LyapunovOrbit solve_lyapunov(double x_star, double py_guess, const SystemParams& p,
                             const CorrectorConfig& cfg);

/// Solves for L(x_star) with no user-provided guess: seeds from the
/// linearization at the libration point and continues in x* to the target.
LyapunovOrbit solve_lyapunov_auto(double x_star, const SystemParams& p,
                                  const CorrectorConfig& cfg);

/// Ordered family of Lyapunov orbits over an interval of x*.
struct Family {
    double x_lo = 0.0;
    double x_hi = 0.0;
    std::vector<LyapunovOrbit> members;  // strictly increasing x_star

    const LyapunovOrbit& nearest(double x_star) const;
    double interpolate_kappa(double x_star) const;
    double interpolate_period(double x_star) const;
};

/// Continuation scan over [x_lo, x_hi] with n_nodes sample orbits.
Family scan_family(double x_lo, double x_hi, int n_nodes, const SystemParams& p,
                   const CorrectorConfig& cfg);

/// Parameterization k0(x*, theta) = Phi_{theta T / 2pi}(q(x*)).
State4 parameterize_k0(const LyapunovOrbit& orb, double theta, const SystemParams& p,
                       const FlowConfig& cfg);

struct DerivativeEstimate {
    double value = 0.0;
    double error = 0.0;       // step-halving (Richardson) error estimate
    bool low_confidence = false;  // secant-only estimate on a 2-node family
};

/// dT/dx* at x_star by central differences over fresh solves, seeded from the
/// family; step-halving error control.
DerivativeEstimate period_derivative(const Family& fam, double x_star,
                                     const SystemParams& p, const CorrectorConfig& cfg);

/// d/dx* H(q(x*)), same estimator as period_derivative.
DerivativeEstimate energy_derivative(const Family& fam, double x_star,
                                     const SystemParams& p, const CorrectorConfig& cfg);

}  // namespace r3bp

#endif
