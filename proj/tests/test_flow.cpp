#include <doctest.h>

#include <cmath>

#include "fixture.hpp"
#include "r3bp/flow.hpp"

using namespace r3bp;

TEST_CASE("energy is conserved to 1e-10 over |t| <= 100") {
    const auto& f = fixture::pipeline();
    const State4 s0 = f.reference().seed();
    const double h0 = energy(s0, f.params);
    for (double t : {25.0, 100.0, -25.0, -100.0}) {
        const State4 st = flow(s0, t, f.params, f.quad.flow);
        CHECK(std::abs(energy(st, f.params) - h0) < 1e-10);
    }
}

TEST_CASE("time-reversal consistency of the flow") {
    const auto& f = fixture::pipeline();
    const State4 s0 = f.reference().seed();
    for (double t : {1.7, -1.7, 3.0}) {
        const State4 back = flow(flow(s0, t, f.params, f.quad.flow), -t, f.params, f.quad.flow);
        CHECK((back - s0).norm() < 1e-9);
    }
    // On the hyperbolic orbit the round trip amplifies round-off by
    // lambda_u^(|t| / T); longer legs can only meet a scaled tolerance.
    const State4 back = flow(flow(s0, 8.3, f.params, f.quad.flow), -8.3, f.params, f.quad.flow);
    CHECK((back - s0).norm() < 1e-5);
}

TEST_CASE("reversing symmetry conjugates forward and backward flow") {
    const auto& f = fixture::pipeline();
    const State4 s0 = f.reference().seed();
    for (double t : {2.0, 5.0, 9.5}) {
        const State4 lhs = apply_symmetry(flow(s0, t, f.params, f.quad.flow));
        const State4 rhs = flow(apply_symmetry(s0), -t, f.params, f.quad.flow);
        CHECK((lhs - rhs).norm() < 1e-9);
    }
}

TEST_CASE("variational flow is symplectic to 1e-8 over one period") {
    const auto& f = fixture::pipeline();
    const auto& orb = f.reference();
    const auto [sT, M] = flow_with_variational(orb.seed(), orb.period, f.params, f.quad.flow);
    Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
    J(0, 2) = J(1, 3) = 1.0;
    J(2, 0) = J(3, 1) = -1.0;
    CHECK((M.transpose() * J * M - J).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((sT - orb.seed()).norm() < 1e-9);  // closes up after one period
}

TEST_CASE("variational matrix matches a finite-difference Jacobian") {
    const auto& f = fixture::pipeline();
    const State4 s0 = f.reference().seed();
    const double t = 1.5, h = 1e-7;
    const auto [st, M] = flow_with_variational(s0, t, f.params, f.quad.flow);
    auto a = s0.to_array();
    for (int j = 0; j < 4; ++j) {
        auto hi = a, lo = a;
        hi[j] += h;
        lo[j] -= h;
        const State4 d = (1.0 / (2 * h)) * (flow(State4::from_array(hi), t, f.params, f.quad.flow) -
                                            flow(State4::from_array(lo), t, f.params, f.quad.flow));
        const double col[4] = {d.x, d.y, d.px, d.py};
        for (int i = 0; i < 4; ++i) CHECK(M(i, j) == doctest::Approx(col[i]).epsilon(1e-5));
    }
}

TEST_CASE("fixed-grid variational flow agrees with the adaptive endpoint") {
    const auto& f = fixture::pipeline();
    const auto& orb = f.reference();
    const auto [sa, Ma] = flow_with_variational(orb.seed(), 2.5, f.params, f.quad.flow);
    const auto [sf, Mf] = flow_with_variational_fixed(orb.seed(), 2.5, f.params, 0.005);
    CHECK((sa - sf).norm() < 1e-9);
    CHECK((Ma - Mf).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("section crossings: start on section not counted, directions filtered") {
    const auto& f = fixture::pipeline();
    const auto& orb = f.reference();
    const State4 s0 = orb.seed();  // sits on {y = 0}

    Section any = Section::y_zero();
    const auto both = poincare_crossings(s0, any, 4, f.params, f.quad.flow);
    REQUIRE(both.size() == 4);
    CHECK(both[0].time > 1e-6);  // the t = 0 crossing is skipped
    // A symmetric orbit crosses y = 0 twice per period.
    CHECK(both[1].time == doctest::Approx(orb.period).epsilon(1e-9));

    Section up = any;
    up.direction = CrossingDirection::Positive;
    Section down = any;
    down.direction = CrossingDirection::Negative;
    const auto pos = poincare_crossings(s0, up, 2, f.params, f.quad.flow);
    const auto neg = poincare_crossings(s0, down, 2, f.params, f.quad.flow);
    REQUIRE(pos.size() == 2);
    REQUIRE(neg.size() == 2);
    // Directed crossings alternate; each directed family is period-spaced.
    CHECK(pos[1].time - pos[0].time == doctest::Approx(orb.period).epsilon(1e-9));
    CHECK(neg[1].time - neg[0].time == doctest::Approx(orb.period).epsilon(1e-9));
    CHECK(std::abs(pos[0].time - neg[0].time) > 0.1);

    // Half-plane restriction: the Lyapunov orbit stays at x < 0, so the
    // x > 0 section never fires for it (it only fires on homoclinic excursions).
    FlowConfig horizon = f.quad.flow;
    horizon.time_horizon = 2.5 * orb.period;
    const auto restricted =
        poincare_crossings(s0, Section::y_zero_x_positive(), 2, f.params, horizon);
    CHECK(restricted.empty());

    // poincare_map(n) is crossings[n-1].
    const auto second = poincare_map(s0, any, 2, f.params, f.quad.flow);
    CHECK(second.time == doctest::Approx(both[1].time).epsilon(1e-12));
    CHECK((second.state - both[1].state).norm() < 1e-10);
}

TEST_CASE("crossing search respects the time horizon") {
    const auto& f = fixture::pipeline();
    FlowConfig short_cfg = f.quad.flow;
    short_cfg.time_horizon = 1.0;  // under half a period: no crossing reachable
    const auto none =
        poincare_crossings(f.reference().seed(), Section::y_zero(), 3, f.params, short_cfg);
    CHECK(none.empty());
}

TEST_CASE("flow configuration validation") {
    FlowConfig bad;
    bad.abs_tol = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
