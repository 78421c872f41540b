#ifndef R3BP_DYNAMICS_HPP
#define R3BP_DYNAMICS_HPP

#include <Eigen/Dense>

#include "r3bp/types.hpp"

namespace r3bp {

/// Distances to the two rotating-frame centers (mu, 0) and (mu-1, 0).
/// Throws SingularityError below the configured floor.
std::pair<double, double> primary_distances(const State4& s, const SystemParams& p);

/// Effective potential Omega(x, y) = (x^2 + y^2)/2 + (1-mu)/r1 + mu/r2.
double effective_potential(double x, double y, const SystemParams& p);

/// Autonomous rotating-frame Hamiltonian
/// H = ((p_x + y)^2 + (p_y - x)^2)/2 - Omega(x, y).
double energy(const State4& s, const SystemParams& p);

/// Hamiltonian vector field F = J grad H.
State4 vector_field(const State4& s, const SystemParams& p);

/// Jacobian DF of the vector field; trace-free by construction.
Eigen::Matrix4d vector_field_jacobian(const State4& s, const SystemParams& p);

/// Reversing symmetry S(x, y, p_x, p_y) = (x, -y, -p_x, p_y).
State4 apply_symmetry(const State4& s);

/// Linearization DS of the reversing symmetry (a constant diagonal matrix).
Eigen::Matrix4d symmetry_matrix();

/// First-order eccentricity perturbation of the Hamiltonian,
/// G = (1-mu)/r1^3 g(mu, x, y, t) + mu/r2^3 g(mu-1, x, y, t) with
/// g(a, x, y, t) = a(-2 y sin t + x cos t) - a^2 cos t.
double perturbation_G(const State4& s, double t, const SystemParams& p);

/// Closed-form partial derivative of G in its explicit time argument.
double perturbation_G_dt(const State4& s, double t, const SystemParams& p);

/// True iff (x, y) is accessible at energy h, i.e. Omega(x, y) >= -h.
bool hill_region_contains(double x, double y, double h, const SystemParams& p);

}  // namespace r3bp

#endif
