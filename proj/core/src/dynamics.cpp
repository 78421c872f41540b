#include "r3bp/dynamics.hpp"

#include <cmath>

namespace r3bp {

std::pair<double, double> primary_distances(const State4& s, const SystemParams& p) {
    const double dx1 = s.x - p.primary_x();
    const double dx2 = s.x - p.secondary_x();
    const double r1 = std::sqrt(dx1 * dx1 + s.y * s.y);
    const double r2 = std::sqrt(dx2 * dx2 + s.y * s.y);
    if (r1 < p.r_floor || r2 < p.r_floor)
        throw SingularityError("state within singularity floor of a primary");
    return {r1, r2};
}

double effective_potential(double x, double y, const SystemParams& p) {
    State4 s{x, y, 0.0, 0.0};
    const auto [r1, r2] = primary_distances(s, p);
    return 0.5 * (x * x + y * y) + (1.0 - p.mu) / r1 + p.mu / r2;
}

double energy(const State4& s, const SystemParams& p) {
    const double vx = s.px + s.y;
    const double vy = s.py - s.x;
    return 0.5 * (vx * vx + vy * vy) - effective_potential(s.x, s.y, p);
}

namespace {

struct PotentialDerivs {
    double ox, oy;            // grad Omega
    double oxx, oxy, oyy;     // Hessian of Omega
};

PotentialDerivs potential_derivs(const State4& s, const SystemParams& p) {
    const auto [r1, r2] = primary_distances(s, p);
    const double dx1 = s.x - p.primary_x();
    const double dx2 = s.x - p.secondary_x();
    const double r13 = r1 * r1 * r1, r23 = r2 * r2 * r2;
    const double r15 = r13 * r1 * r1, r25 = r23 * r2 * r2;
    const double m1 = 1.0 - p.mu, m2 = p.mu;

    PotentialDerivs d;
    d.ox = s.x - m1 * dx1 / r13 - m2 * dx2 / r23;
    d.oy = s.y - m1 * s.y / r13 - m2 * s.y / r23;
    d.oxx = 1.0 - m1 * (1.0 / r13 - 3.0 * dx1 * dx1 / r15)
                - m2 * (1.0 / r23 - 3.0 * dx2 * dx2 / r25);
    d.oyy = 1.0 - m1 * (1.0 / r13 - 3.0 * s.y * s.y / r15)
                - m2 * (1.0 / r23 - 3.0 * s.y * s.y / r25);
    d.oxy = 3.0 * m1 * dx1 * s.y / r15 + 3.0 * m2 * dx2 * s.y / r25;
    return d;
}

double g_bar(double a, double x, double y, double t) {
    return a * (-2.0 * y * std::sin(t) + x * std::cos(t)) - a * a * std::cos(t);
}

double g_bar_dt(double a, double x, double y, double t) {
    return a * (-2.0 * y * std::cos(t) - x * std::sin(t)) + a * a * std::sin(t);
}

}  // namespace

State4 vector_field(const State4& s, const SystemParams& p) {
    const auto d = potential_derivs(s, p);
    const double vx = s.px + s.y;
    const double vy = s.py - s.x;
    return {vx, vy, vy + d.ox, -vx + d.oy};
}

Eigen::Matrix4d vector_field_jacobian(const State4& s, const SystemParams& p) {
    const auto d = potential_derivs(s, p);
    Eigen::Matrix4d m;
    m <<  0.0,          1.0,          1.0,  0.0,
         -1.0,          0.0,          0.0,  1.0,
         -1.0 + d.oxx,  d.oxy,        0.0,  1.0,
          d.oxy,       -1.0 + d.oyy, -1.0,  0.0;
    return m;
}

State4 apply_symmetry(const State4& s) {
    return {s.x, -s.y, -s.px, s.py};
}

Eigen::Matrix4d symmetry_matrix() {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m(1, 1) = -1.0;
    m(2, 2) = -1.0;
    return m;
}

double perturbation_G(const State4& s, double t, const SystemParams& p) {
    const auto [r1, r2] = primary_distances(s, p);
    const double r13 = r1 * r1 * r1, r23 = r2 * r2 * r2;
    return (1.0 - p.mu) / r13 * g_bar(p.mu, s.x, s.y, t)
         + p.mu / r23 * g_bar(p.mu - 1.0, s.x, s.y, t);
}

double perturbation_G_dt(const State4& s, double t, const SystemParams& p) {
    const auto [r1, r2] = primary_distances(s, p);
    const double r13 = r1 * r1 * r1, r23 = r2 * r2 * r2;
    return (1.0 - p.mu) / r13 * g_bar_dt(p.mu, s.x, s.y, t)
         + p.mu / r23 * g_bar_dt(p.mu - 1.0, s.x, s.y, t);
}

bool hill_region_contains(double x, double y, double h, const SystemParams& p) {
    return effective_potential(x, y, p) >= -h;
}

}  // namespace r3bp
