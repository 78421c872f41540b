#include "r3bp/flow.hpp"

#include <boost/math/tools/toms748_solve.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>

namespace odeint = boost::numeric::odeint;

namespace r3bp {

namespace {

template <std::size_t N>
using Arr = std::array<double, N>;

template <std::size_t N>
struct Controlled {
    using stepper_t = odeint::runge_kutta_fehlberg78<Arr<N>>;
    using checker_t = odeint::default_error_checker<double, odeint::array_algebra,
                                                    odeint::default_operations>;
    using adjuster_t = odeint::default_step_adjuster<double, double>;
    using type = odeint::controlled_runge_kutta<stepper_t, checker_t, adjuster_t>;

    static type make(const FlowConfig& cfg) {
        return type(checker_t(cfg.abs_tol, cfg.rel_tol), adjuster_t(cfg.max_step),
                    stepper_t());
    }
};

// Advances s over [0, t_total] (t_total >= 0), calling observer after every
// accepted step. The observer returns false to stop early.
template <std::size_t N, class Sys, class Obs>
void integrate_span(Sys sys, Arr<N>& s, double t_total, const FlowConfig& cfg,
                    Obs observer) {
    auto ctrl = Controlled<N>::make(cfg);
    double t = 0.0;
    double dt = std::min({cfg.max_step, 1e-3, t_total});
    while (t < t_total) {
        dt = std::min({dt, cfg.max_step, t_total - t});
        const double t_prev = t;
        Arr<N> s_prev = s;
        int fails = 0;
        while (ctrl.try_step(sys, s, t, dt) == odeint::fail) {
            if (++fails > 500) throw SolverError("flow: step-size underflow");
            if (!(std::abs(dt) > 0.0)) throw SolverError("flow: step-size underflow");
        }
        if (!observer(t_prev, s_prev, t, s)) return;
    }
}

template <std::size_t N, class Sys>
void integrate_span(Sys sys, Arr<N>& s, double t_total, const FlowConfig& cfg) {
    integrate_span<N>(sys, s, t_total, cfg,
                      [](double, const Arr<N>&, double, const Arr<N>&) { return true; });
}

struct Rhs4 {
    const SystemParams* p;
    double sign;  // -1 for backward flows: integrate the negated field
    void operator()(const Arr<4>& s, Arr<4>& dsdt, double) const {
        const State4 f = vector_field(State4::from_array(s), *p);
        dsdt = {sign * f.x, sign * f.y, sign * f.px, sign * f.py};
    }
};

// State plus row-major 4x4 variational matrix.
struct Rhs20 {
    const SystemParams* p;
    double sign;
    void operator()(const Arr<20>& s, Arr<20>& dsdt, double) const {
        const State4 st{s[0], s[1], s[2], s[3]};
        const State4 f = vector_field(st, *p);
        const Eigen::Matrix4d df = vector_field_jacobian(st, *p);
        dsdt[0] = sign * f.x;
        dsdt[1] = sign * f.y;
        dsdt[2] = sign * f.px;
        dsdt[3] = sign * f.py;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) acc += df(i, k) * s[4 + 4 * k + j];
                dsdt[4 + 4 * i + j] = sign * acc;
            }
    }
};

double section_coord(const Arr<4>& s, const Section& sec) {
    return s[static_cast<int>(sec.coord)] - sec.level;
}

bool half_plane_ok(const Arr<4>& s, const Section& sec) {
    if (!sec.half_plane) return true;
    return s[static_cast<int>(sec.half_plane->first)] > sec.half_plane->second;
}

}  // namespace

State4 flow(const State4& s, double t, const SystemParams& p, const FlowConfig& cfg) {
    if (t == 0.0) return s;
    Arr<4> a = s.to_array();
    Rhs4 rhs{&p, t > 0.0 ? 1.0 : -1.0};
    integrate_span<4>(rhs, a, std::abs(t), cfg);
    return State4::from_array(a);
}

std::pair<State4, Eigen::Matrix4d> flow_with_variational(const State4& s, double t,
                                                         const SystemParams& p,
                                                         const FlowConfig& cfg) {
    Arr<20> a{};
    const auto sa = s.to_array();
    std::copy(sa.begin(), sa.end(), a.begin());
    for (int i = 0; i < 4; ++i) a[4 + 4 * i + i] = 1.0;
    if (t != 0.0) {
        Rhs20 rhs{&p, t > 0.0 ? 1.0 : -1.0};
        integrate_span<20>(rhs, a, std::abs(t), cfg);
    }
    Eigen::Matrix4d m;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = a[4 + 4 * i + j];
    return {State4{a[0], a[1], a[2], a[3]}, m};
}

std::pair<State4, Eigen::Matrix4d> flow_with_variational_fixed(const State4& s, double t,
                                                               const SystemParams& p,
                                                               double dt) {
    if (dt <= 0.0) throw std::invalid_argument("flow_with_variational_fixed: dt <= 0");
    Arr<20> a{};
    const auto sa = s.to_array();
    std::copy(sa.begin(), sa.end(), a.begin());
    for (int i = 0; i < 4; ++i) a[4 + 4 * i + i] = 1.0;
    if (t != 0.0) {
        Rhs20 rhs{&p, t > 0.0 ? 1.0 : -1.0};
        const double total = std::abs(t);
        const auto n = static_cast<long>(std::ceil(total / dt));
        const double h = total / static_cast<double>(n);
        odeint::runge_kutta_fehlberg78<Arr<20>> stepper;
        for (long k = 0; k < n; ++k) stepper.do_step(rhs, a, k * h, h);
    }
    Eigen::Matrix4d m;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = a[4 + 4 * i + j];
    return {State4{a[0], a[1], a[2], a[3]}, m};
}

std::vector<CrossingResult> poincare_crossings(const State4& s, const Section& sec,
                                               int n_max, const SystemParams& p,
                                               const FlowConfig& cfg) {
    if (n_max <= 0) return {};
    std::vector<CrossingResult> out;
    Rhs4 rhs{&p, 1.0};

    Arr<4> a = s.to_array();
    // Reference sample: the most recent point whose section coordinate is
    // clearly nonzero. Samples inside the noise band around the section are
    // skipped outright, so a grazing passage (or a stalled step while the
    // orbit slides along the section) cannot fake a crossing out of
    // round-off-level sign flips. A genuine crossing is still caught: once
    // the orbit emerges cleanly on the other side, the sign change against
    // the pre-passage reference brackets it. Starting on the section does
    // not count as a crossing because no reference exists yet.
    bool armed = false;
    double t_ref = 0.0;
    Arr<4> s_ref = a;
    double sigma_ref = section_coord(a, sec);
    if (std::abs(sigma_ref) > 10.0 * cfg.event_tol) armed = true;

    auto on_step = [&](double, const Arr<4>&, double t_now, const Arr<4>& s_now) {
        const double sigma_now = section_coord(s_now, sec);
        if (std::abs(sigma_now) <= 10.0 * cfg.event_tol) return;
        if (armed && sigma_ref * sigma_now < 0.0 && t_now > t_ref) {
            // Localize the crossing time inside [t_ref, t_now].
            const double h = t_now - t_ref;
            auto g = [&](double dt) {
                if (dt <= 0.0) return sigma_ref;
                Arr<4> c = s_ref;
                integrate_span<4>(rhs, c, dt, cfg);
                return section_coord(c, sec);
            };
            auto tol = [](double lo, double hi) { return hi - lo < 1e-14; };
            std::uintmax_t iters = 200;
            auto bracket = boost::math::tools::toms748_solve(g, 0.0, h, sigma_ref,
                                                             sigma_now, tol, iters);
            const double dtc = 0.5 * (bracket.first + bracket.second);
            Arr<4> c = s_ref;
            integrate_span<4>(rhs, c, dtc, cfg);

            const State4 cs = State4::from_array(c);
            const State4 f = vector_field(cs, p);
            const double sdot = f.to_array()[static_cast<int>(sec.coord)];
            if (std::abs(sdot) <= cfg.event_tol)
                throw SolverError("poincare: tangential section crossing");

            const bool dir_ok =
                sec.direction == CrossingDirection::Any ||
                (sec.direction == CrossingDirection::Positive && sdot > 0.0) ||
                (sec.direction == CrossingDirection::Negative && sdot < 0.0);
            if (dir_ok && half_plane_ok(c, sec))
                out.push_back({cs, t_ref + dtc});
        }
        armed = true;
        t_ref = t_now;
        s_ref = s_now;
        sigma_ref = sigma_now;
    };

    integrate_span<4>(
        rhs, a, cfg.time_horizon, cfg,
        [&](double t0, const Arr<4>& s0, double t1, const Arr<4>& s1) {
            on_step(t0, s0, t1, s1);
            return static_cast<int>(out.size()) < n_max;
        });
    if (static_cast<int>(out.size()) > n_max) out.resize(n_max);
    return out;
}

CrossingResult poincare_map(const State4& s, const Section& sec, int n,
                            const SystemParams& p, const FlowConfig& cfg) {
    if (n <= 0) throw std::invalid_argument("poincare_map: n must be positive");
    const auto crossings = poincare_crossings(s, sec, n, p, cfg);
    if (static_cast<int>(crossings.size()) < n)
        throw SolverError("poincare_map: no crossing within time horizon");
    return crossings[n - 1];
}

}  // namespace r3bp
