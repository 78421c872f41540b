#include <doctest.h>

#include <cmath>

#include "r3bp/dynamics.hpp"

using namespace r3bp;

namespace {
const SystemParams params;
const State4 probe{0.62, 0.31, -0.45, 1.31};

// Central-difference gradient of a scalar function of the state.
template <typename F>
State4 fd_gradient(F f, const State4& s, double h = 1e-6) {
    State4 g;
    auto a = s.to_array();
    double* out[4] = {&g.x, &g.y, &g.px, &g.py};
    for (int i = 0; i < 4; ++i) {
        auto hi = a, lo = a;
        hi[i] += h;
        lo[i] -= h;
        *out[i] = (f(State4::from_array(hi)) - f(State4::from_array(lo))) / (2 * h);
    }
    return g;
}
}  // namespace

TEST_CASE("primary distances and singularity floor") {
    const auto [r1, r2] = primary_distances(probe, params);
    CHECK(r1 == doctest::Approx(std::hypot(probe.x - params.primary_x(), probe.y)).epsilon(1e-14));
    CHECK(r2 == doctest::Approx(std::hypot(probe.x - params.secondary_x(), probe.y)).epsilon(1e-14));
    CHECK_THROWS_AS(primary_distances({params.primary_x(), 0, 0, 0}, params), SingularityError);
}

TEST_CASE("effective potential is symmetric in y") {
    CHECK(effective_potential(0.62, 0.31, params) ==
          doctest::Approx(effective_potential(0.62, -0.31, params)).epsilon(1e-15));
}

TEST_CASE("vector field is the Hamiltonian field of the energy") {
    const State4 g = fd_gradient([](const State4& s) { return energy(s, params); }, probe);
    const State4 f = vector_field(probe, params);
    // F = J grad H with J the canonical symplectic matrix in (x, y, px, py).
    CHECK(f.x == doctest::Approx(g.px).epsilon(1e-7));
    CHECK(f.y == doctest::Approx(g.py).epsilon(1e-7));
    CHECK(f.px == doctest::Approx(-g.x).epsilon(1e-7));
    CHECK(f.py == doctest::Approx(-g.y).epsilon(1e-7));
}

TEST_CASE("vector field Jacobian matches finite differences and is trace-free") {
    const Eigen::Matrix4d J = vector_field_jacobian(probe, params);
    CHECK(std::abs(J.trace()) < 1e-12);
    const double h = 1e-6;
    auto a = probe.to_array();
    for (int j = 0; j < 4; ++j) {
        auto hi = a, lo = a;
        hi[j] += h;
        lo[j] -= h;
        const State4 d = (1.0 / (2 * h)) * (vector_field(State4::from_array(hi), params) -
                                            vector_field(State4::from_array(lo), params));
        const double col[4] = {d.x, d.y, d.px, d.py};
        for (int i = 0; i < 4; ++i) CHECK(J(i, j) == doctest::Approx(col[i]).epsilon(5e-6));
    }
}

TEST_CASE("reversing symmetry: involution, energy invariance, field anti-equivariance") {
    const State4 ss = apply_symmetry(probe);
    CHECK(ss.x == probe.x);
    CHECK(ss.y == -probe.y);
    CHECK(ss.px == -probe.px);
    CHECK(ss.py == probe.py);
    const State4 back = apply_symmetry(ss);
    CHECK((back - probe).norm() == 0.0);
    CHECK(energy(ss, params) == doctest::Approx(energy(probe, params)).epsilon(1e-15));

    // F(S s) = -S F(s): the symmetry reverses time.
    const State4 lhs = vector_field(ss, params);
    const State4 rhs = apply_symmetry(vector_field(probe, params));
    CHECK((lhs + rhs).norm() < 1e-13);

    const Eigen::Matrix4d S = symmetry_matrix();
    Eigen::Vector4d v(probe.x, probe.y, probe.px, probe.py);
    Eigen::Vector4d sv = S * v;
    CHECK(sv(0) == probe.x);
    CHECK(sv(1) == -probe.y);
    CHECK(sv(2) == -probe.px);
    CHECK(sv(3) == probe.py);
}

TEST_CASE("perturbation time derivative matches finite differences") {
    for (double t : {0.0, 0.7, 2.9, -4.1}) {
        const double h = 1e-6;
        const double fd =
            (perturbation_G(probe, t + h, params) - perturbation_G(probe, t - h, params)) /
            (2 * h);
        CHECK(perturbation_G_dt(probe, t, params) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("perturbation reflects oddly under the reversing symmetry") {
    // dG/dt(S s, t) = -dG/dt(s, -t): the identity behind the forward-tail
    // evaluation of the backward improper integral.
    const State4 ss = apply_symmetry(probe);
    for (double t : {0.3, 1.9, -2.2}) {
        CHECK(perturbation_G_dt(ss, t, params) ==
              doctest::Approx(-perturbation_G_dt(probe, -t, params)).epsilon(1e-13));
        CHECK(perturbation_G(ss, t, params) ==
              doctest::Approx(perturbation_G(probe, -t, params)).epsilon(1e-13));
    }
}

TEST_CASE("hill region agrees with the effective potential threshold") {
    const double h = -1.515;
    for (double x : {-1.2, -0.6, 0.3, 0.9})
        for (double y : {-0.8, 0.0, 0.5}) {
            if (std::hypot(x - params.primary_x(), y) < 1e-6) continue;
            CHECK(hill_region_contains(x, y, h, params) ==
                  (effective_potential(x, y, params) >= -h));
        }
    // Near a primary the well is always accessible; far from everything at
    // this level the zero-velocity curve closes.
    CHECK(hill_region_contains(params.secondary_x() + 0.01, 0.0, h, params));
}
