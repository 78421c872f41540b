#ifndef R3BP_TYPES_HPP
#define R3BP_TYPES_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace r3bp {

/// Thrown when a trajectory gets closer to a primary than the configured floor.
class SingularityError : public std::runtime_error {
public:
    explicit SingularityError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when an iterative solve (Newton, bracketing, continuation) fails.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Mass ratio of the rotating-frame model. The heavier primary sits at
/// (mu, 0), the lighter one at (mu - 1, 0).
struct SystemParams {
    double mu = 0.0009537;       // Jupiter-Sun by default
    double r_floor = 1e-12;      // hard error below this distance to a primary

    double primary_x() const { return mu; }
    double secondary_x() const { return mu - 1.0; }

    void validate() const {
        if (!(mu > 0.0 && mu < 0.5))
            throw std::invalid_argument("SystemParams: mu must be in (0, 1/2)");
        if (!(r_floor > 0.0))
            throw std::invalid_argument("SystemParams: r_floor must be positive");
    }
};

/// Phase point (x, y, p_x, p_y) in the rotating frame.
struct State4 {
    double x = 0.0;
    double y = 0.0;
    double px = 0.0;
    double py = 0.0;

    std::array<double, 4> to_array() const { return {x, y, px, py}; }
    static State4 from_array(const std::array<double, 4>& a) {
        return {a[0], a[1], a[2], a[3]};
    }

    double norm() const { return std::sqrt(x * x + y * y + px * px + py * py); }

    friend State4 operator+(const State4& a, const State4& b) {
        return {a.x + b.x, a.y + b.y, a.px + b.px, a.py + b.py};
    }
    friend State4 operator-(const State4& a, const State4& b) {
        return {a.x - b.x, a.y - b.y, a.px - b.px, a.py - b.py};
    }
    friend State4 operator*(double c, const State4& s) {
        return {c * s.x, c * s.y, c * s.px, c * s.py};
    }
};

/// First-order elliptic perturbation parameters. eps is a reported scale only;
/// every Melnikov quantity computed here is an eps-independent first-order object.
struct PerturbationParams {
    double eps = 0.0;
    double tau = 0.0;  // phase, reduced mod 2*pi on use

    void validate() const {
        if (eps < 0.0) throw std::invalid_argument("PerturbationParams: eps must be >= 0");
    }
};

inline double wrap_angle_2pi(double a) {
    const double two_pi = 2.0 * M_PI;
    double r = std::fmod(a, two_pi);
    if (r < 0.0) r += two_pi;
    return r;
}

/// Reduce to (-pi, pi].
inline double wrap_angle_pi(double a) {
    double r = wrap_angle_2pi(a);
    if (r > M_PI) r -= 2.0 * M_PI;
    return r;
}

}  // namespace r3bp

#endif
