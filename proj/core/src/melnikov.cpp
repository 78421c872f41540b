#include "r3bp/melnikov.hpp"

#include <algorithm>
#include <atomic>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <thread>

namespace odeint = boost::numeric::odeint;

namespace r3bp {

std::pair<double, double> scattering_s0(double x_star, double theta,
                                        const HomoclinicPoint& hp,
                                        const HomoclinicChannel& ch) {
    const auto rep = ch.representative(theta);
    if (!rep) throw std::domain_error("scattering_s0: theta outside the channel domain");
    return {x_star, *rep - 2.0 * hp.omega};
}

namespace {

using Arr9 = std::array<double, 9>;

struct PairRhs {
    const SystemParams* p;
    double t_off;  // dG/dt time argument is t_off + s, s the integration clock
    bool accumulate;
    void operator()(const Arr9& s, Arr9& dsdt, double t) const {
        const State4 hom{s[0], s[1], s[2], s[3]};
        const State4 per{s[4], s[5], s[6], s[7]};
        const State4 fh = vector_field(hom, *p);
        const State4 fp = vector_field(per, *p);
        dsdt[0] = fh.x;
        dsdt[1] = fh.y;
        dsdt[2] = fh.px;
        dsdt[3] = fh.py;
        dsdt[4] = fp.x;
        dsdt[5] = fp.y;
        dsdt[6] = fp.px;
        dsdt[7] = fp.py;
        dsdt[8] = accumulate ? integrand(s, t) : 0.0;
    }
    double integrand(const Arr9& s, double t) const {
        const State4 hom{s[0], s[1], s[2], s[3]};
        const State4 per{s[4], s[5], s[6], s[7]};
        return perturbation_G_dt(hom, t_off + t, *p) - perturbation_G_dt(per, t_off + t, *p);
    }
};

struct TailIntegral {
    double value = 0.0;
    double tail_bound = 0.0;
    bool reached = false;
};

// One improper tail of the Melnikov derivative, written in the seed-forward
// variable s: integral over s in (-inf, u_star] of dG/dt along the homoclinic
// trajectory a(s) minus dG/dt along the periodic orbit b(s) = Phi_s(q), both
// with time argument t_off + s. In this variable a(tau) = p_i and
// a(0) = q + h v, so the pair separation GROWS from the fiber offset instead
// of having to shrink to delta_tail: integrating toward the orbit is hopeless
// in double precision because round-off excites the complementary hyperbolic
// direction at the same exponential rate the gap decays.
//
// Truncation: start at s0 = -k T with a(s0) = q + h lambda_u^{-k} v (exact,
// since v is the unstable eigenvector of the monodromy), choosing the
// smallest k with |h| |v| lambda_u^{-k} < delta_tail. The discarded remainder
// decays geometrically with known rate log(lambda_u)/T and is charged to the
// error estimate. The periodic component is reset to q at every full period
// so the hyperbolic orbit cannot drift off itself over long spans.
TailIntegral seed_tail_integral(const LyapunovOrbit& orb, const MonodromyData& mono,
                                double h_seed, double u_star, double t_off,
                                const SystemParams& p, const QuadratureConfig& qcfg) {
    TailIntegral out;
    const double T = orb.period;
    const double seed_gap = std::abs(h_seed) * mono.unstable_dir.norm();

    int k = 0;
    double contracted = seed_gap;
    while (contracted >= qcfg.delta_tail && k < 64) {
        contracted /= mono.lambda_u;
        ++k;
    }

    const double rate = std::log(mono.lambda_u) / T;
    if (u_star <= 0.0) {
        // The span ends at or before the fiber seed: over the whole tail the
        // pair separation stays below the seed gap further contracted by
        // lambda_u^(u_star / T), so the integral is negligible. Charge the
        // geometric remainder (with a phase-safety factor on the integrand
        // slope at the seed) to the error estimate and keep the value at zero.
        const State4 q0 = orb.seed();
        const State4 a0 = q0 + h_seed * State4{mono.unstable_dir(0), mono.unstable_dir(1),
                                               mono.unstable_dir(2), mono.unstable_dir(3)};
        PairRhs probe{&p, t_off, true};
        Arr9 sp{a0.x, a0.y, a0.px, a0.py, q0.x, q0.y, q0.px, q0.py, 0.0};
        out.tail_bound = 4.0 * std::abs(probe.integrand(sp, 0.0)) *
                         std::pow(mono.lambda_u, u_star / T) / rate;
        out.reached = true;
        return out;
    }
    if (u_star + k * T > qcfg.u_max) return out;  // not reached
    out.reached = true;

    const double s0 = -k * T;
    const State4 q = orb.seed();
    const double h0 = h_seed * std::pow(mono.lambda_u, -k);
    const State4 a0 = q + h0 * State4{mono.unstable_dir(0), mono.unstable_dir(1),
                                      mono.unstable_dir(2), mono.unstable_dir(3)};

    const bool ode_rule = qcfg.rule == QuadratureRule::OdeAccumulate;
    PairRhs rhs{&p, t_off, true};
    Arr9 s{a0.x, a0.y, a0.px, a0.py, q.x, q.y, q.px, q.py, 0.0};

    // Geometric remainder of the discarded tail below s0.
    out.tail_bound = std::abs(rhs.integrand(s, s0)) / rate / (1.0 - 1.0 / mono.lambda_u);

    static const double xi = std::sqrt(15.0) / 10.0;
    const double gl_nodes[3] = {0.5 - xi, 0.5, 0.5 + xi};
    const double gl_weights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    double gl_sum = 0.0;

    // Both rules march the pair through the SAME fixed node grid (panel
    // boundaries plus the interior Gauss-Legendre nodes), so they share one
    // trajectory to the bit and differ only in how the integrand samples are
    // combined: the embedded RK quadrature of the 9th state vs. the composite
    // GL weights. With two independent step sequences the hyperbolic growth
    // along the homoclinic excursion (log lambda_u / T per unit time) would
    // amplify step-placement round-off into O(1e-6) relative disagreement
    // near the far end of the span.
    odeint::runge_kutta_fehlberg78<Arr9> stepper;
    double t = s0;
    auto step_to = [&](double t_next) {
        if (t_next > t) stepper.do_step(rhs, s, t, t_next - t);
        t = t_next;
    };

    // Chunk at period boundaries of the periodic component.
    double chunk_lo = s0;
    for (int m = 1; chunk_lo < u_star; ++m) {
        const double chunk_hi = std::min(s0 + m * T, u_star);
        if (chunk_lo > s0) {
            s[4] = q.x;
            s[5] = q.y;
            s[6] = q.px;
            s[7] = q.py;
        }
        double lo = chunk_lo;
        while (lo < chunk_hi) {
            const double hpanel = std::min(0.02, chunk_hi - lo);
            for (int g = 0; g < 3; ++g) {
                step_to(lo + gl_nodes[g] * hpanel);
                gl_sum += gl_weights[g] * hpanel * rhs.integrand(s, t);
            }
            step_to(lo + hpanel);
            lo += hpanel;
        }
        chunk_lo = chunk_hi;
    }

    out.value = ode_rule ? s[8] : gl_sum;
    return out;
}

}  // namespace

MelnikovSample dS_dtheta(const LyapunovOrbit& orb, const HomoclinicPoint& hp,
                         const HomoclinicChannel& ch, double theta, double tau,
                         const SystemParams& p, const QuadratureConfig& qcfg) {
    return dS_dtheta(orb, monodromy(orb, p, qcfg.flow), hp, ch, theta, tau, p, qcfg);
}

MelnikovSample dS_dtheta(const LyapunovOrbit& orb, const MonodromyData& mono,
                         const HomoclinicPoint& hp, const HomoclinicChannel& ch,
                         double theta, double tau, const SystemParams& p,
                         const QuadratureConfig& qcfg) {
    qcfg.validate();
    const double T = orb.period;
    const double om = hp.omega;
    const double scale = T / (2.0 * M_PI);

    // theta is an angle: reduce it into the channel's literal window. The
    // window choice is part of the channel's identity (see HomoclinicChannel).
    const auto rep = ch.representative(theta);
    if (!rep) throw std::domain_error("dS_dtheta: theta outside the channel domain");
    theta = *rep;

    const State4 q = orb.seed();
    // Boundary evaluations stay within one period of q: longer flows along
    // the hyperbolic orbit would amplify round-off by lambda_u per period.
    const State4 q_bwd = flow(q, wrap_angle_2pi(theta) * scale, p, qcfg.flow);
    const State4 q_fwd = flow(q, wrap_angle_2pi(theta - 2.0 * om) * scale, p, qcfg.flow);

    const double boundary = -perturbation_G(q_bwd, tau, p) + perturbation_G(q_fwd, tau, p);

    MelnikovSample sample;
    sample.x_star = orb.x_star;
    sample.theta = theta;
    sample.tau = tau;
    sample.branch_i = ch.branch_i;
    sample.channel_j = ch.index_j;

    if (!qcfg.include_integrals) {
        sample.value = scale * boundary;
        sample.error = 0.0;
        sample.accepted = true;
        return sample;
    }

    // Both improper integrals are taken in the seed-forward variable
    // s = u_star + u (backward tail) resp. s = u_star - u (forward tail,
    // first reflected through the reversing symmetry: S fixes p_i, so
    // Phi_u(z) = S(Phi_{-u}(S z)), and dG/dt(S x, t) = -dG/dt(x, -t)).
    // Either way the homoclinic trajectory is Phi_s(q + h v) and the paired
    // periodic trajectory is Phi_s(q); only the span above the seed and the
    // affine time argument t_off + s differ:
    //   backward tail: u_star = tau_i + c, t_off = tau - u_star,
    //   forward tail:  u_star = tau_i - c, t_off = -tau - u_star,
    // with c = (theta - omega_i) T / 2 pi - window_shift * T placing the
    // channel window along the orbit (see HomoclinicChannel), and the forward
    // tail enters the total with the opposite sign from the reflection.
    const double c = (theta - om) * scale - ch.window_shift * T;
    const auto back = seed_tail_integral(orb, mono, hp.h, hp.tau + c,
                                         tau - (hp.tau + c), p, qcfg);
    const auto fwd = seed_tail_integral(orb, mono, hp.h, hp.tau - c,
                                        -tau - (hp.tau - c), p, qcfg);

    sample.value = scale * (boundary - back.value + fwd.value);
    sample.error = scale * (2.0 * qcfg.abs_tol + back.tail_bound + fwd.tail_bound);
    if (!back.reached || !fwd.reached) {
        sample.accepted = false;
        sample.reject_reason = "tail gap did not reach delta_tail before u_max";
    } else if (sample.error >= 1e-6 * std::max(1.0, std::abs(sample.value))) {
        sample.accepted = false;
        sample.reject_reason = "error estimate above 1e-6 * max(1, |value|)";
    } else {
        sample.accepted = true;
    }
    return sample;
}

std::vector<MelnikovSample> grid_evaluate(
    const Family& fam, const std::map<double, std::vector<HomoclinicPoint>>& homoclinics,
    const std::vector<double>& theta_grid, double tau, const SystemParams& p,
    const QuadratureConfig& qcfg, int jobs) {
    if (theta_grid.empty() || homoclinics.empty()) return {};

    // One task per channel whose domain holds a representative of the
    // canonical angle. The j-channels of a branch are genuinely different
    // samples: a 2 pi shift of theta shifts the perturbation phase by the
    // orbit period.
    struct Task {
        const LyapunovOrbit* orb;
        const MonodromyData* mono;
        const HomoclinicPoint* hp;
        HomoclinicChannel channel;
        double theta_rep;
    };
    std::deque<MonodromyData> monos;
    std::vector<Task> tasks;
    const auto channels = standard_channels();
    for (const auto& [x_star, hps] : homoclinics) {
        const LyapunovOrbit& orb = fam.nearest(x_star);
        monos.push_back(monodromy(orb, p, qcfg.flow));
        const MonodromyData* mono = &monos.back();
        for (const auto& hp : hps) {
            for (const double theta : theta_grid) {
                for (const auto& ch : channels) {
                    if (ch.branch_i != hp.branch) continue;
                    const auto rep = ch.representative(wrap_angle_2pi(theta));
                    if (!rep) continue;
                    tasks.push_back({&orb, mono, &hp, ch, *rep});
                }
            }
        }
    }

    std::vector<MelnikovSample> out(tasks.size());
    const int n_threads = std::max(1, jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= tasks.size()) break;
            const Task& t = tasks[k];
            out[k] = dS_dtheta(*t.orb, *t.mono, *t.hp, t.channel, t.theta_rep, tau, p, qcfg);
        }
    };
    std::vector<std::thread> pool;
    for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return out;
}

Certificate verify_sign_cover(const std::vector<MelnikovSample>& samples,
                              double margin_floor) {
    Certificate cert;
    cert.margin_floor = margin_floor;

    std::map<std::pair<long long, long long>, CertificateNode> nodes;
    for (const auto& s : samples) {
        if (!s.accepted) {
            ++cert.rejected_samples;
            continue;
        }
        const double theta_canon = wrap_angle_2pi(s.theta);
        const auto key = std::make_pair(llround(s.x_star * 1e9), llround(theta_canon * 1e9));
        auto& node = nodes[key];
        node.x_star = s.x_star;
        node.theta = theta_canon;
        const double floor = margin_floor > 0.0 ? margin_floor : 10.0 * s.error;
        if (s.value > floor && (!node.has_positive || s.value > node.pos_value)) {
            node.has_positive = true;
            node.pos_value = s.value;
            node.pos_i = s.branch_i;
            node.pos_j = s.channel_j;
        }
        if (s.value < -floor && (!node.has_negative || s.value < node.neg_value)) {
            node.has_negative = true;
            node.neg_value = s.value;
            node.neg_i = s.branch_i;
            node.neg_j = s.channel_j;
        }
    }

    cert.pass = !nodes.empty();
    double worst_pos = std::numeric_limits<double>::infinity();
    double worst_neg = -std::numeric_limits<double>::infinity();
    for (auto& [key, node] : nodes) {
        if (!(node.has_positive && node.has_negative)) cert.pass = false;
        if (node.has_positive) worst_pos = std::min(worst_pos, node.pos_value);
        if (node.has_negative) worst_neg = std::max(worst_neg, node.neg_value);
        cert.nodes.push_back(node);
    }
    cert.min_positive_margin = std::isfinite(worst_pos) ? worst_pos : 0.0;
    cert.max_negative_margin = std::isfinite(worst_neg) ? worst_neg : 0.0;
    return cert;
}

}  // namespace r3bp
