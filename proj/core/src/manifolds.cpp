#include "r3bp/manifolds.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <limits>
#include <map>

namespace r3bp {

Eigen::Vector4d normalize_first_component(const Eigen::Vector4d& v) {
    const double scale = v.cwiseAbs().maxCoeff();
    if (scale == 0.0) throw SolverError("normalize_first_component: zero vector");
    for (int i = 0; i < 4; ++i) {
        if (std::abs(v(i)) > 1e-9 * scale) return v / v(i);
    }
    throw SolverError("normalize_first_component: no usable component");
}

MonodromyData monodromy(const LyapunovOrbit& orb, const SystemParams& p,
                        const FlowConfig& cfg) {
    const auto [sT, A] = flow_with_variational(orb.seed(), orb.period, p, cfg);

    Eigen::EigenSolver<Eigen::Matrix4d> es(A);
    int i_u = -1, i_s = -1;
    int unit_count = 0;
    for (int i = 0; i < 4; ++i) {
        const auto ev = es.eigenvalues()(i);
        if (std::abs(ev - std::complex<double>(1.0, 0.0)) < 1e-4) {
            ++unit_count;
        } else if (std::abs(ev.imag()) < 1e-8 && ev.real() > 1.0) {
            i_u = i;
        } else if (std::abs(ev.imag()) < 1e-8 && std::abs(ev.real()) < 1.0) {
            i_s = i;
        }
    }
    if (i_u < 0 || i_s < 0 || unit_count != 2)
        throw SolverError("monodromy: eigenvalue pattern is not (lambda, 1/lambda, 1, 1)");

    MonodromyData md;
    md.A = A;
    md.lambda_u = es.eigenvalues()(i_u).real();
    md.lambda_s = es.eigenvalues()(i_s).real();
    if (std::abs(md.lambda_u * md.lambda_s - 1.0) > 1e-6)
        throw SolverError("monodromy: hyperbolic pair does not multiply to 1");
    md.unstable_dir = normalize_first_component(es.eigenvectors().col(i_u).real());
    return md;
}

namespace {

struct CrossingSample {
    bool present = false;
    double px = 0.0;
    double x = 0.0;
    double time = 0.0;
};

// p_x at the first max_crossings crossings of Sigma_{x>0} from q + h v.
std::vector<CrossingSample> fiber_crossings(const LyapunovOrbit& orb,
                                            const Eigen::Vector4d& v, double h,
                                            const SystemParams& p,
                                            const HomoclinicSearchConfig& cfg) {
    State4 qh = orb.seed();
    qh.x += h * v(0);
    qh.y += h * v(1);
    qh.px += h * v(2);
    qh.py += h * v(3);
    const auto crossings =
        poincare_crossings(qh, Section::y_zero_x_positive(), cfg.max_crossings, p, cfg.flow);
    std::vector<CrossingSample> out(cfg.max_crossings);
    for (std::size_t k = 0; k < crossings.size(); ++k) {
        out[k] = {true, crossings[k].state.px, crossings[k].state.x, crossings[k].time};
    }
    return out;
}

State4 fiber_seed(const LyapunovOrbit& orb, const Eigen::Vector4d& v, double h) {
    State4 qh = orb.seed();
    qh.x += h * v(0);
    qh.y += h * v(1);
    qh.px += h * v(2);
    qh.py += h * v(3);
    return qh;
}

HomoclinicPoint build_point(const LyapunovOrbit& orb, const Eigen::Vector4d& v, double h,
                            int crossing_index, const SystemParams& p,
                            const HomoclinicSearchConfig& cfg) {
    const auto cr =
        poincare_map(fiber_seed(orb, v, h), Section::y_zero_x_positive(), crossing_index, p,
                     cfg.flow);

    // Final polish: Newton in (h, tau) on the fixed-grid variational flow,
    // whose endpoint is smooth in both unknowns. The adaptive propagator's
    // step-sequence jitter puts a ~1e-7 floor on the same residuals.
    double tau = cr.time;
    State4 best_state;
    Eigen::Matrix4d best_m;
    double best_res = std::numeric_limits<double>::infinity();
    double best_h = h, best_tau = tau;
    for (int it = 0; it < 12; ++it) {
        const auto [st, m] = flow_with_variational_fixed(fiber_seed(orb, v, h), tau, p);
        const double res = std::hypot(st.y, st.px);
        if (res < best_res) {
            best_res = res;
            best_state = st;
            best_m = m;
            best_h = h;
            best_tau = tau;
        }
        if (res < 1e-13) break;
        if (std::abs(tau - cr.time) > 1.0)
            throw SolverError("homoclinic: polish left the crossing neighborhood");
        const State4 f = vector_field(st, p);
        const Eigen::Vector4d mv = m * v;
        const double det = mv(1) * f.px - f.y * mv(2);
        if (det == 0.0 || !std::isfinite(det))
            throw SolverError("homoclinic: singular polish system");
        h -= (st.y * f.px - f.y * st.px) / det;
        tau -= (mv(1) * st.px - st.y * mv(2)) / det;
    }
    if (best_res > cfg.px_tol)
        throw SolverError("homoclinic: polish residual above tolerance");

    HomoclinicPoint hp;
    // The true intersection lies on the fixed set {y = 0, p_x = 0}; report its
    // symmetric projection (x, p_y are the computed data, residual ~1e-13).
    hp.point = State4{best_state.x, 0.0, 0.0, best_state.py};
    hp.h = best_h;
    hp.tau = best_tau;
    hp.omega = wrap_angle_pi(2.0 * M_PI * best_tau / orb.period);
    hp.crossing_index = crossing_index;
    hp.tangent = normalize_first_component(best_m * v);
    return hp;
}

// Polish h so that p_x at the given crossing vanishes, given a sign-change
// bracket [h_lo, h_hi].
double polish_root(const LyapunovOrbit& orb, const Eigen::Vector4d& v, int crossing_index,
                   double h_lo, double h_hi, const SystemParams& p,
                   const HomoclinicSearchConfig& cfg) {
    auto g = [&](double h) {
        const auto cs = fiber_crossings(orb, v, h, p, cfg);
        if (!cs[crossing_index - 1].present)
            throw SolverError("homoclinic: crossing disappeared during root polish");
        return cs[crossing_index - 1].px;
    };
    auto tol = boost::math::tools::eps_tolerance<double>(60);
    std::uintmax_t iters = 120;
    auto r = boost::math::tools::toms748_solve(g, h_lo, h_hi, tol, iters);
    return 0.5 * (r.first + r.second);
}

}  // namespace

std::vector<HomoclinicPoint> find_symmetric_homoclinics(const LyapunovOrbit& orb,
                                                        const MonodromyData& mono,
                                                        const SystemParams& p,
                                                        const HomoclinicSearchConfig& cfg) {
    // One full contraction factor in |h| ending at scale_max / lambda_u, so each
    // homoclinic orbit appears exactly once in the sweep window.
    const double h_hi = cfg.h_scale_max / mono.lambda_u;
    const double h_lo = h_hi / mono.lambda_u;
    const double ratio = std::pow(h_hi / h_lo, 1.0 / (cfg.sweep_points - 1.0));

    std::vector<HomoclinicPoint> found;
    for (const double sign : {+1.0, -1.0}) {
        std::vector<std::vector<CrossingSample>> sweep(cfg.sweep_points);
        std::vector<double> hs(cfg.sweep_points);
        for (int k = 0; k < cfg.sweep_points; ++k) {
            hs[k] = sign * h_lo * std::pow(ratio, k);
            sweep[k] = fiber_crossings(orb, mono.unstable_dir, hs[k], p, cfg);
        }
        for (int n = 1; n <= cfg.max_crossings; ++n) {
            for (int k = 0; k + 1 < cfg.sweep_points; ++k) {
                const auto& a = sweep[k][n - 1];
                const auto& b = sweep[k + 1][n - 1];
                if (!a.present || !b.present) continue;
                if (a.px * b.px >= 0.0) continue;
                // Continuity guard: skip brackets where the crossing jumps to a
                // different part of the section.
                if (std::abs(a.x - b.x) > 0.2) continue;
                HomoclinicPoint hp;
                try {
                    const double h_root = polish_root(orb, mono.unstable_dir, n,
                                                      std::min(hs[k], hs[k + 1]),
                                                      std::max(hs[k], hs[k + 1]), p, cfg);
                    hp = build_point(orb, mono.unstable_dir, h_root, n, p, cfg);
                } catch (const SolverError&) {
                    continue;  // spurious bracket: the crossing is not persistent
                }
                if (std::abs(hp.point.px) > cfg.px_tol) continue;

                const bool duplicate =
                    std::any_of(found.begin(), found.end(), [&](const HomoclinicPoint& q) {
                        return (q.point - hp.point).norm() < 1e-6;
                    });
                if (!duplicate) found.push_back(hp);
            }
        }
    }
    if (found.size() < 2)
        throw SolverError("find_symmetric_homoclinics: fewer than two intersections found");

    // Keep the pair with the most direct excursion: minimal crossing index,
    // then the fiber side that reaches the section first (its trajectories go
    // straight to the x > 0 region), then the two earliest transit times.
    const int n_min = std::min_element(found.begin(), found.end(),
                                       [](const HomoclinicPoint& a, const HomoclinicPoint& b) {
                                           return a.crossing_index < b.crossing_index;
                                       })
                          ->crossing_index;
    std::erase_if(found, [&](const HomoclinicPoint& q) { return q.crossing_index != n_min; });

    auto min_tau_of_side = [&](double sign) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : found)
            if (q.h * sign > 0.0) best = std::min(best, q.tau);
        return best;
    };
    const double direct_sign = min_tau_of_side(+1.0) <= min_tau_of_side(-1.0) ? +1.0 : -1.0;
    std::vector<HomoclinicPoint> side;
    for (const auto& q : found)
        if (q.h * direct_sign > 0.0) side.push_back(q);
    if (side.size() >= 2) found = side;

    std::sort(found.begin(), found.end(),
              [](const HomoclinicPoint& a, const HomoclinicPoint& b) { return a.tau < b.tau; });
    found.resize(2);
    std::sort(found.begin(), found.end(),
              [](const HomoclinicPoint& a, const HomoclinicPoint& b) {
                  return a.point.x < b.point.x;
              });
    found[0].branch = 1;
    found[1].branch = 2;

    if (cfg.validate_linearization) {
        for (auto& hp : found) {
            // Richardson-style check of the fiber linearization: re-solving at
            // the offset rescaled by one contraction factor must recover the
            // same point. Rescale upward — dividing tiny offsets by lambda_u
            // would sink the seed below the floating-point noise floor of the
            // state coordinates.
            HomoclinicPoint seed = hp;
            seed.h = std::abs(hp.h * mono.lambda_u) <= cfg.h_scale_max
                         ? hp.h * mono.lambda_u
                         : hp.h / mono.lambda_u;
            HomoclinicSearchConfig quiet = cfg;
            quiet.validate_linearization = false;
            const auto hp2 = refine_homoclinic(orb, mono, seed, p, quiet);
            if ((hp2.point - hp.point).norm() > cfg.lin_check_tol)
                throw SolverError("homoclinic: fiber linearization check failed");
        }
    }
    return found;
}

HomoclinicPoint refine_homoclinic(const LyapunovOrbit& orb, const MonodromyData& mono,
                                  const HomoclinicPoint& seed, const SystemParams& p,
                                  const HomoclinicSearchConfig& cfg) {
    const int n = seed.crossing_index;
    auto g = [&](double h) {
        const auto cs = fiber_crossings(orb, mono.unstable_dir, h, p, cfg);
        if (!cs[n - 1].present) throw SolverError("refine_homoclinic: crossing missing");
        return cs[n - 1].px;
    };
    // Widen a bracket around the seed offset until the residual changes sign.
    double f_lo, f_hi;
    double lo = seed.h, hi = seed.h;
    double width = 0.02 * std::abs(seed.h);
    bool ok = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
        lo = seed.h - width;
        hi = seed.h + width;
        f_lo = g(lo);
        f_hi = g(hi);
        if (f_lo * f_hi < 0.0) {
            ok = true;
            break;
        }
        width *= 2.0;
    }
    if (!ok) throw SolverError("refine_homoclinic: no sign change near seed");
    const double h_root = polish_root(orb, mono.unstable_dir, n, std::min(lo, hi),
                                      std::max(lo, hi), p, cfg);
    auto hp = build_point(orb, mono.unstable_dir, h_root, n, p, cfg);
    hp.branch = seed.branch;
    if (std::abs(hp.point.px) > cfg.px_tol)
        throw SolverError("refine_homoclinic: residual above tolerance");
    return hp;
}

ChannelSpans channel_tangent_spans(const HomoclinicPoint& hp, const Family& fam,
                                   const SystemParams& p, const CorrectorConfig& ccfg,
                                   const HomoclinicSearchConfig& hcfg, double dx_star) {
    // x* of the supporting orbit recovered from the family: the homoclinic
    // point stores no label, so locate the nearest family node by energy.
    const double e0 = energy(hp.point, p);
    const auto it = std::min_element(
        fam.members.begin(), fam.members.end(),
        [&](const LyapunovOrbit& a, const LyapunovOrbit& b) {
            return std::abs(a.energy - e0) < std::abs(b.energy - e0);
        });
    if (it == fam.members.end()) throw SolverError("channel_tangent_spans: empty family");
    const double x0 = it->x_star;

    auto solve_point = [&](double x) {
        const auto orb = solve_lyapunov(x, fam.interpolate_kappa(x), p, ccfg);
        const auto mono = monodromy(orb, p, hcfg.flow);
        HomoclinicSearchConfig quiet = hcfg;
        quiet.validate_linearization = false;
        return refine_homoclinic(orb, mono, hp, p, quiet).point;
    };
    auto central = [&](double dx) {
        const State4 hi = solve_point(x0 + dx);
        const State4 lo = solve_point(x0 - dx);
        Eigen::Vector4d d;
        d << (hi.x - lo.x), (hi.y - lo.y), (hi.px - lo.px), (hi.py - lo.py);
        return Eigen::Vector4d(d / (2.0 * dx));
    };

    const Eigen::Vector4d d1 = central(dx_star);
    const Eigen::Vector4d d2 = central(0.5 * dx_star);
    const Eigen::Vector4d dr = (4.0 * d2 - d1) / 3.0;

    ChannelSpans spans;
    spans.fd_error = (d2 - d1).norm() / 3.0;
    if (spans.fd_error > 0.1 * dr.norm())
        throw SolverError("channel_tangent_spans: finite-difference error above 10%");
    spans.dp_dxstar = normalize_first_component(dr);

    const State4 f = vector_field(hp.point, p);
    Eigen::Vector4d fv;
    fv << f.x, f.y, f.px, f.py;
    spans.flow_dir = normalize_first_component(fv);
    return spans;
}

TransversalityReport check_transversality(const HomoclinicPoint& hp,
                                          const ChannelSpans& spans) {
    TransversalityReport rep;
    rep.rows.row(0) = hp.tangent.normalized();
    rep.rows.row(1) = spans.dp_dxstar.normalized();
    rep.rows.row(2) = spans.flow_dir.normalized();
    Eigen::JacobiSVD<Eigen::Matrix<double, 3, 4>> svd(rep.rows);
    rep.sigma_min = svd.singularValues().minCoeff();
    rep.pass = rep.sigma_min > 1e-3;
    return rep;
}

std::array<HomoclinicChannel, 4> standard_channels() {
    const double pi8 = M_PI / 8.0;
    return {HomoclinicChannel{1, 1, -2.0 * M_PI + pi8, pi8, 5},
            HomoclinicChannel{1, 2, 0.0, 2.0 * M_PI, 5},
            HomoclinicChannel{2, 1, -2.0 * M_PI + pi8, pi8, -6},
            HomoclinicChannel{2, 2, 0.0, 2.0 * M_PI, -6}};
}

}  // namespace r3bp
