#include "r3bp/orbits.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <optional>

namespace r3bp {

namespace {

// Half-turn shooting residual pi_px P(x*, 0, 0, p_y) and the crossing time.
struct HalfTurn {
    double residual;
    double time;
    State4 state;
};

HalfTurn half_turn(double x_star, double py, const SystemParams& p,
                   const FlowConfig& cfg) {
    const State4 q{x_star, 0.0, 0.0, py};
    const auto c = poincare_map(q, Section::y_zero(), 1, p, cfg);
    return {c.state.px, c.time, c.state};
}

// d residual / d p_y from the variational flow, with the time-of-flight
// correction for the implicit crossing time.
double half_turn_derivative(double x_star, double py, double t_cross,
                            const SystemParams& p, const FlowConfig& cfg) {
    const State4 q{x_star, 0.0, 0.0, py};
    const auto [sc, m] = flow_with_variational(q, t_cross, p, cfg);
    const State4 f = vector_field(sc, p);
    const double dt_dpy = -m(1, 3) / f.y;
    return m(2, 3) + f.px * dt_dpy;
}

// Seed kappa from the linear center dynamics at the libration point: pick the
// pure-rotation eigenplane of DF(s_L) and the phase with y = p_x = 0.
double linear_kappa_guess(double x_star, double x_lib, const SystemParams& p) {
    const State4 s_lib{x_lib, 0.0, 0.0, x_lib};
    const Eigen::Matrix4d df = vector_field_jacobian(s_lib, p);
    Eigen::EigenSolver<Eigen::Matrix4d> es(df);

    int idx = -1;
    double best_im = 0.0;
    for (int i = 0; i < 4; ++i) {
        const auto ev = es.eigenvalues()(i);
        if (std::abs(ev.real()) < 1e-8 && ev.imag() > best_im) {
            best_im = ev.imag();
            idx = i;
        }
    }
    if (idx < 0) throw SolverError("libration point has no center eigenplane");

    const Eigen::Vector4cd w = es.eigenvectors().col(idx);
    const Eigen::Vector4d u = w.real(), v = w.imag();
    // Re((a+ib) w) at t=0 with (a,b) = (v_y, u_y) kills the y component; the
    // p_x component vanishes with it by reversibility.
    Eigen::Vector4d d0 = v(1) * u - u(1) * v;
    if (std::abs(d0(0)) < 1e-14) throw SolverError("degenerate center eigenvector");
    const double c = (x_star - x_lib) / d0(0);
    return x_lib + c * d0(3);
}

}  // namespace

double libration_point_x(const SystemParams& p) {
    p.validate();
    auto f = [&](double x) {
        const double d1 = x - p.primary_x();
        const double d2 = x - p.secondary_x();
        return x - (1.0 - p.mu) * d1 / std::pow(std::abs(d1), 3)
                 - p.mu * d2 / std::pow(std::abs(d2), 3);
    };
    double lo = p.secondary_x() + 1e-6;
    double hi = p.primary_x() - 1e-6;
    auto tol = [](double a, double b) { return b - a < 1e-15; };
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
    return 0.5 * (r.first + r.second);
}

LyapunovOrbit solve_lyapunov(double x_star, double py_guess, const SystemParams& p,
                             const CorrectorConfig& cfg) {
    double py = py_guess;
    auto ht = half_turn(x_star, py, p, cfg.flow);

    for (int it = 0; it < cfg.max_newton; ++it) {
        if (std::abs(ht.residual) < cfg.residual_tol) {
            LyapunovOrbit orb;
            orb.x_star = x_star;
            orb.kappa = py;
            orb.period = 2.0 * ht.time;
            orb.energy = energy(orb.seed(), p);
            return orb;
        }

        const double drdpy = half_turn_derivative(x_star, py, ht.time, p, cfg.flow);
        double step = -ht.residual / drdpy;
        if (!std::isfinite(step)) throw SolverError("solve_lyapunov: singular Newton step");
        if (std::abs(step) > 0.05) step = std::copysign(0.05, step);

        // Damped step: the residual is non-monotone far from the root (other
        // y=0 crossings take over), so insist on monotone |residual| decrease
        // and a comparable crossing time (different roots live in basins with
        // very different half-turn times).
        bool accepted = false;
        for (int half = 0; half < 30; ++half) {
            HalfTurn trial;
            try {
                trial = half_turn(x_star, py + step, p, cfg.flow);
            } catch (const SolverError&) {
                step *= 0.5;
                continue;
            }
            const bool same_basin =
                trial.time > 0.6 * ht.time && trial.time < 1.7 * ht.time;
            if (same_basin && std::abs(trial.residual) < std::abs(ht.residual)) {
                py += step;
                ht = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) throw SolverError("solve_lyapunov: line search stalled");
    }
    throw SolverError("solve_lyapunov: no convergence in Newton iteration");
}

namespace {

// Secant continuation in kappa from a solved orbit to x_target, with adaptive
// micro-steps. (prev2_x, prev2_kappa) is an earlier family point seeding the
// first secant slope.
LyapunovOrbit continue_orbit(LyapunovOrbit prev, double prev2_x, double prev2_kappa,
                             double x_target, const SystemParams& p,
                             const CorrectorConfig& cfg) {
    if (prev.x_star == x_target) return prev;
    const double dir = x_target > prev.x_star ? 1.0 : -1.0;
    double h = cfg.continuation_step;
    while (true) {
        const double remaining = std::abs(x_target - prev.x_star);
        const double x_next = (remaining <= h) ? x_target : prev.x_star + dir * h;
        const double slope = (prev.kappa - prev2_kappa) / (prev.x_star - prev2_x);
        const double guess = prev.kappa + slope * (x_next - prev.x_star);
        LyapunovOrbit orb;
        try {
            orb = solve_lyapunov(x_next, guess, p, cfg);
        } catch (const SolverError&) {
            h *= 0.5;
            if (h < 1e-6) throw SolverError("lyapunov continuation breakdown");
            continue;
        }
        // Reject basin hops: the period must vary smoothly along the family.
        const double dT_limit = 0.5 + 200.0 * std::abs(x_next - prev.x_star);
        if (std::abs(orb.period - prev.period) > dT_limit) {
            h *= 0.5;
            if (h < 1e-6) throw SolverError("lyapunov continuation breakdown");
            continue;
        }
        if (x_next == x_target) return orb;
        prev2_x = prev.x_star;
        prev2_kappa = prev.kappa;
        prev = orb;
        h = std::min(2.0 * h, cfg.continuation_step);
    }
}

}  // namespace

LyapunovOrbit solve_lyapunov_auto(double x_star, const SystemParams& p,
                                  const CorrectorConfig& cfg) {
    const double x_lib = libration_point_x(p);
    const double dist = x_star - x_lib;
    if (dist == 0.0) throw SolverError("solve_lyapunov_auto: x* at the libration point");
    const double dir = dist > 0.0 ? 1.0 : -1.0;

    // First orbit at small amplitude where the linear guess is valid; the
    // family limits onto the equilibrium (kappa -> x_lib), which seeds the
    // first secant slope of the continuation.
    const double x0 = x_lib + dir * std::min(std::abs(dist), cfg.continuation_step);
    LyapunovOrbit first = solve_lyapunov(x0, linear_kappa_guess(x0, x_lib, p), p, cfg);
    return continue_orbit(std::move(first), x_lib, x_lib, x_star, p, cfg);
}

const LyapunovOrbit& Family::nearest(double x_star) const {
    if (members.empty()) throw SolverError("Family: empty");
    const auto it = std::min_element(members.begin(), members.end(),
                                     [&](const LyapunovOrbit& a, const LyapunovOrbit& b) {
                                         return std::abs(a.x_star - x_star) <
                                                std::abs(b.x_star - x_star);
                                     });
    return *it;
}

namespace {

// Neville interpolation through the (up to) 4 nodes nearest to x.
double interpolate_nodes(const std::vector<LyapunovOrbit>& nodes, double x,
                         double (*field)(const LyapunovOrbit&)) {
    if (nodes.empty()) throw SolverError("Family: empty");
    if (nodes.size() == 1) return field(nodes.front());

    std::vector<int> idx(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return std::abs(nodes[a].x_star - x) < std::abs(nodes[b].x_star - x);
    });
    const int n = std::min<std::size_t>(4, nodes.size());

    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = nodes[idx[i]].x_star;
        ys[i] = field(nodes[idx[i]]);
    }
    for (int level = 1; level < n; ++level)
        for (int i = 0; i < n - level; ++i)
            ys[i] = ((x - xs[i + level]) * ys[i] + (xs[i] - x) * ys[i + 1]) /
                    (xs[i] - xs[i + level]);
    return ys[0];
}

}  // namespace

double Family::interpolate_kappa(double x_star) const {
    return interpolate_nodes(members, x_star,
                             [](const LyapunovOrbit& o) { return o.kappa; });
}

double Family::interpolate_period(double x_star) const {
    return interpolate_nodes(members, x_star,
                             [](const LyapunovOrbit& o) { return o.period; });
}

Family scan_family(double x_lo, double x_hi, int n_nodes, const SystemParams& p,
                   const CorrectorConfig& cfg) {
    if (!(x_lo < x_hi)) throw std::invalid_argument("scan_family: need x_lo < x_hi");
    if (n_nodes < 1) throw std::invalid_argument("scan_family: need n_nodes >= 1");

    std::vector<double> xs(n_nodes);
    if (n_nodes == 1)
        xs[0] = 0.5 * (x_lo + x_hi);
    else
        for (int i = 0; i < n_nodes; ++i)
            xs[i] = x_lo + (x_hi - x_lo) * i / (n_nodes - 1.0);

    // Walk outward from the node nearest the libration point, so every solve
    // is seeded from a close neighbor.
    const double x_lib = libration_point_x(p);
    std::sort(xs.begin(), xs.end(), [&](double a, double b) {
        return std::abs(a - x_lib) < std::abs(b - x_lib);
    });

    Family fam;
    fam.x_lo = x_lo;
    fam.x_hi = x_hi;
    try {
        LyapunovOrbit prev;
        double prev2_x = x_lib, prev2_kappa = x_lib;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            LyapunovOrbit orb;
            if (i == 0) {
                orb = solve_lyapunov_auto(xs[i], p, cfg);
            } else {
                orb = continue_orbit(prev, prev2_x, prev2_kappa, xs[i], p, cfg);
            }
            if (i > 0) {
                prev2_x = prev.x_star;
                prev2_kappa = prev.kappa;
            }
            prev = orb;
            fam.members.push_back(orb);
        }
    } catch (const SolverError& e) {
        throw SolverError(std::string("scan_family: continuation breakdown: ") + e.what());
    }
    std::sort(fam.members.begin(), fam.members.end(),
              [](const LyapunovOrbit& a, const LyapunovOrbit& b) {
                  return a.x_star < b.x_star;
              });
    return fam;
}

State4 parameterize_k0(const LyapunovOrbit& orb, double theta, const SystemParams& p,
                       const FlowConfig& cfg) {
    const double th = wrap_angle_2pi(theta);
    return flow(orb.seed(), th * orb.period / (2.0 * M_PI), p, cfg);
}

namespace {

DerivativeEstimate family_derivative(const Family& fam, double x_star,
                                     const SystemParams& p, const CorrectorConfig& cfg,
                                     double (*field)(const LyapunovOrbit&)) {
    if (fam.members.empty()) throw SolverError("derivative: empty family");
    if (fam.members.size() == 1 || fam.x_lo == fam.x_hi)
        throw SolverError("derivative: zero-width family");

    if (fam.members.size() == 2) {
        const auto& a = fam.members.front();
        const auto& b = fam.members.back();
        DerivativeEstimate est;
        est.value = (field(b) - field(a)) / (b.x_star - a.x_star);
        est.error = std::abs(est.value);  // no second estimator available
        est.low_confidence = true;
        return est;
    }

    const double delta = 2.5e-4;
    auto solve_at = [&](double x) {
        return solve_lyapunov(x, fam.interpolate_kappa(x), p, cfg);
    };
    auto central = [&](double dx) {
        const auto hi = solve_at(x_star + dx);
        const auto lo = solve_at(x_star - dx);
        return (field(hi) - field(lo)) / (2.0 * dx);
    };
    const double d1 = central(delta);
    const double d2 = central(0.5 * delta);

    DerivativeEstimate est;
    est.value = (4.0 * d2 - d1) / 3.0;  // Richardson
    est.error = std::abs(d2 - d1) / 3.0;
    if (est.error > 0.1 * std::abs(est.value))
        throw SolverError("derivative: error estimate exceeds 10% of value");
    return est;
}

}  // namespace

DerivativeEstimate period_derivative(const Family& fam, double x_star,
                                     const SystemParams& p, const CorrectorConfig& cfg) {
    return family_derivative(fam, x_star, p, cfg,
                             [](const LyapunovOrbit& o) { return o.period; });
}

DerivativeEstimate energy_derivative(const Family& fam, double x_star,
                                     const SystemParams& p, const CorrectorConfig& cfg) {
    return family_derivative(fam, x_star, p, cfg,
                             [](const LyapunovOrbit& o) { return o.energy; });
}

}  // namespace r3bp
