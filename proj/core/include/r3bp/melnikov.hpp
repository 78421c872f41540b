#ifndef R3BP_MELNIKOV_HPP
#define R3BP_MELNIKOV_HPP

#include <map>
#include <string>
#include <vector>

#include "r3bp/manifolds.hpp"

namespace r3bp {

enum class QuadratureRule {
    OdeAccumulate,  // integrand carried as an extra state of the co-integrated ODE
    CompositeGL     // composite 3-point Gauss-Legendre along the co-integration
};

struct QuadratureConfig {
    double delta_tail = 1e-8;  // stop when the homoclinic/periodic gap drops below this
    double u_max = 40.0;       // hard truncation cap (time units)
    double abs_tol = 1e-10;    // quadrature absolute tolerance
    QuadratureRule rule = QuadratureRule::OdeAccumulate;
    bool include_integrals = true;  // false: boundary terms only (diagnostic)
    FlowConfig flow;

    void validate() const {
        if (delta_tail <= 0 || u_max <= 0) {
            throw std::invalid_argument("QuadratureConfig: delta_tail and u_max must be positive");
        }
    }
};

/// Value of dS^{i,j}_{0,tau}/dtheta at s0^{i,j}(x*, theta), one grid node.
struct MelnikovSample {
    double x_star = 0.0;
    double theta = 0.0;  // channel-domain representative (j=1 samples use negative theta)
    double tau = 0.0;
    int branch_i = 0;
    int channel_j = 0;
    double value = 0.0;
    double error = 0.0;  // quadrature tolerance + extrapolated tail bound
    bool accepted = false;
    std::string reject_reason;
};

/// Unperturbed scattering map s0^{i,j}(x*, theta) = (x*, theta - 2 omega_i).
/// Throws if theta lies outside the channel's literal domain.
std::pair<double, double> scattering_s0(double x_star, double theta,
                                        const HomoclinicPoint& hp,
                                        const HomoclinicChannel& ch);

/// Melnikov-type derivative: boundary terms plus two improper integrals of
/// dG/dt differences along the homoclinic vs. the periodic trajectory,
/// co-integrated as one system so the differences are formed at matched u.
MelnikovSample dS_dtheta(const LyapunovOrbit& orb, const HomoclinicPoint& hp,
                         const HomoclinicChannel& ch, double theta, double tau,
                         const SystemParams& p, const QuadratureConfig& qcfg);

/// Same, reusing an already-computed monodromy decomposition of the orbit
/// (the tails are anchored at the unstable-eigenvector fiber seed).
MelnikovSample dS_dtheta(const LyapunovOrbit& orb, const MonodromyData& mono,
                         const HomoclinicPoint& hp, const HomoclinicChannel& ch,
                         double theta, double tau, const SystemParams& p,
                         const QuadratureConfig& qcfg);

/// Evaluate all valid (x*, theta, i, j) combinations. Rejected samples are
/// carried with reasons. theta_grid entries are canonical angles in [0, 2pi);
/// each channel evaluates at its own domain representative.
std::vector<MelnikovSample> grid_evaluate(
    const Family& fam, const std::map<double, std::vector<HomoclinicPoint>>& homoclinics,
    const std::vector<double>& theta_grid, double tau, const SystemParams& p,
    const QuadratureConfig& qcfg, int jobs = 1);

struct CertificateNode {
    double x_star = 0.0;
    double theta = 0.0;  // canonical in [0, 2pi)
    bool has_positive = false;
    bool has_negative = false;
    int pos_i = 0, pos_j = 0;
    int neg_i = 0, neg_j = 0;
    double pos_value = 0.0;
    double neg_value = 0.0;
};

/// Aggregated sign-cover verdict: every grid node must have a strictly
/// positive and a strictly negative witness with margin.
struct Certificate {
    bool pass = false;
    double margin_floor = 0.0;  // 0 means per-sample 10x error estimate
    double tau = 0.0;
    double min_positive_margin = 0.0;  // worst positive witness across nodes
    double max_negative_margin = 0.0;  // worst negative witness across nodes
    std::size_t rejected_samples = 0;
    std::vector<CertificateNode> nodes;
};

Certificate verify_sign_cover(const std::vector<MelnikovSample>& samples,
                              double margin_floor = 0.0);

}  // namespace r3bp

#endif
