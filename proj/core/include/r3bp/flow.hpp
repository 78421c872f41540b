#ifndef R3BP_FLOW_HPP
#define R3BP_FLOW_HPP

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "r3bp/dynamics.hpp"
#include "r3bp/types.hpp"

namespace r3bp {

/// Integrator and event-detection settings. The accuracy target is the
/// contract; the scheme behind it is an adaptive embedded Runge-Kutta of
/// order 8 with error control.
struct FlowConfig {
    double abs_tol = 1e-13;
    double rel_tol = 1e-13;
    double max_step = 0.25;
    double event_tol = 1e-12;   // section-crossing localization tolerance
    double time_horizon = 50.0; // max time to wait for a section crossing

    void validate() const {
        if (abs_tol <= 0 || rel_tol <= 0 || max_step <= 0 || event_tol <= 0)
            throw std::invalid_argument("FlowConfig: tolerances must be positive");
    }
};

enum class Coord { X = 0, Y = 1, Px = 2, Py = 3 };

enum class CrossingDirection { Positive, Negative, Any };

/// Hyperplane section {coord = level}, optionally restricted to a half-plane
/// (e.g. x > 0 for Sigma_{x>0}).
struct Section {
    Coord coord = Coord::Y;
    double level = 0.0;
    CrossingDirection direction = CrossingDirection::Any;
    std::optional<std::pair<Coord, double>> half_plane;  // require coord > value

    static Section y_zero() { return Section{}; }
    static Section y_zero_x_positive() {
        Section s;
        s.half_plane = {Coord::X, 0.0};
        return s;
    }
};

/// Propagate s by time t (t may be negative).
State4 flow(const State4& s, double t, const SystemParams& p, const FlowConfig& cfg);

/// Propagate the state together with the 4x4 variational matrix.
std::pair<State4, Eigen::Matrix4d> flow_with_variational(const State4& s, double t,
                                                         const SystemParams& p,
                                                         const FlowConfig& cfg);

/// Same, on a fixed grid of steps no longer than dt. The endpoint is a smooth
/// function of (s, t), which adaptive stepping cannot guarantee; boundary-value
/// polishes rely on that smoothness.
std::pair<State4, Eigen::Matrix4d> flow_with_variational_fixed(const State4& s, double t,
                                                               const SystemParams& p,
                                                               double dt = 0.01);

struct CrossingResult {
    State4 state;
    double time = 0.0;
};

/// All directed section crossings along the forward orbit of s, up to n_max
/// of them or until the time horizon runs out. Crossings at t = 0 (starting
/// on the section) are not counted.
std::vector<CrossingResult> poincare_crossings(const State4& s, const Section& sec,
                                               int n_max, const SystemParams& p,
                                               const FlowConfig& cfg);

/// State and elapsed time at the n-th directed crossing of the section.
CrossingResult poincare_map(const State4& s, const Section& sec, int n,
                            const SystemParams& p, const FlowConfig& cfg);

}  // namespace r3bp

#endif
