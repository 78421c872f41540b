#ifndef R3BP_MANIFOLDS_HPP
#define R3BP_MANIFOLDS_HPP

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "r3bp/orbits.hpp"

namespace r3bp {

/// Monodromy matrix of a Lyapunov orbit and its hyperbolic splitting.
struct MonodromyData {
    Eigen::Matrix4d A;             // DPhi_T(q)
    double lambda_u = 0.0;         // real, > 1
    double lambda_s = 0.0;         // real, < 1
    Eigen::Vector4d unstable_dir;  // unit-free, first nonzero component +1
};

/// Normalize so the first component with meaningful magnitude equals +1.
/// All published reference vectors follow this convention.
Eigen::Vector4d normalize_first_component(const Eigen::Vector4d& v);

MonodromyData monodromy(const LyapunovOrbit& orb, const SystemParams& p,
                        const FlowConfig& cfg);

/// A symmetric homoclinic intersection point of W^u(L(x*)) and W^s(L(x*))
/// on the fixed set {y = 0, p_x = 0}, with its channel data.
struct HomoclinicPoint {
    int branch = 0;              // 1 = smaller x on the section, 2 = larger x
    State4 point;                // on {y = 0, p_x = 0}, x > 0
    double h = 0.0;              // signed fiber offset along the unstable eigenvector
    double tau = 0.0;            // transit time from q + h v to the point
    double omega = 0.0;          // 2 pi tau / T reduced to (-pi, pi]
    Eigen::Vector4d tangent;     // DPhi_tau (q + h v) v, first-component normalized
    int crossing_index = 0;      // which Sigma_{x>0} crossing the point sits on
};

struct HomoclinicSearchConfig {
    // Seeding window: |h| * lambda_u stays within [scale_min, scale_max]; the
    // sweep spans one full contraction factor so every branch shows up once.
    double h_scale_min = 1e-7;
    double h_scale_max = 1e-5;
    int sweep_points = 48;
    int max_crossings = 4;
    // Residual floor for p_x at the section: integrator noise (~1e-13) is
    // amplified by the ~5-period excursion, so 1e-6 is the realistic limit.
    double px_tol = 1e-6;
    bool validate_linearization = true;  // re-solve at rescaled offset and compare
    // Agreement required from the linearization check. The comparison is
    // hypersensitive to the orbit data: one ulp of kappa is amplified by
    // lambda_u^(tau/T) ~ 5e9 over the excursion, i.e. ~5e-7 of jitter between
    // solves seeded from orbits that differ only in provenance (fresh solve
    // vs. CSV round trip). 1e-6 keeps headroom above that while still
    // rejecting wrong-branch or nonlinear-regime solves by orders of
    // magnitude.
    double lin_check_tol = 1e-6;
    FlowConfig flow;
};

/// Sweep the unstable fiber in both directions and return the S-symmetric
/// homoclinic points found, sorted so branch 1 has the smaller x.
std::vector<HomoclinicPoint> find_symmetric_homoclinics(const LyapunovOrbit& orb,
                                                        const MonodromyData& mono,
                                                        const SystemParams& p,
                                                        const HomoclinicSearchConfig& cfg);

/// Re-solve a known homoclinic point for a nearby orbit, seeded from a
/// neighbor solution (used by family continuation and finite differences).
HomoclinicPoint refine_homoclinic(const LyapunovOrbit& orb, const MonodromyData& mono,
                                  const HomoclinicPoint& seed, const SystemParams& p,
                                  const HomoclinicSearchConfig& cfg);

/// Tangent spans of the homoclinic channel at p_i:
/// span(d/dx* p_i(x*)) and span(F(p_i(x*))), both first-component normalized.
struct ChannelSpans {
    Eigen::Vector4d dp_dxstar;
    Eigen::Vector4d flow_dir;
    double fd_error = 0.0;  // step-halving error estimate on dp_dxstar
};

ChannelSpans channel_tangent_spans(const HomoclinicPoint& hp, const Family& fam,
                                   const SystemParams& p, const CorrectorConfig& ccfg,
                                   const HomoclinicSearchConfig& hcfg,
                                   double dx_star = 2.5e-4);

struct TransversalityReport {
    Eigen::Matrix<double, 3, 4> rows;  // [tangent; dp/dx*; F], row-normalized
    double sigma_min = 0.0;            // smallest singular value
    bool pass = false;                 // rank 3 with margin
};

/// Rank check of {v_i, d/dx* p_i, F(p_i)}; pass iff the smallest singular
/// value after row normalization exceeds 1e-3.
TransversalityReport check_transversality(const HomoclinicPoint& hp,
                                          const ChannelSpans& spans);

/// Homoclinic channel bookkeeping: branch index i and theta-domain index j.
/// Domains are literal real intervals; j = 1 uses negative theta. The domain
/// window matters: the scattering-map derivative is a function of the actual
/// real theta, and shifting theta by 2 pi shifts the perturbation phase by
/// the (incommensurate) orbit period, which is exactly how the two j-channels
/// of a branch differ.
struct HomoclinicChannel {
    int branch_i = 1;
    int index_j = 1;
    double theta_lo = 0.0;
    double theta_hi = 0.0;
    // Placement of the channel window along the homoclinic orbit, in whole
    // orbit periods toward the unstable-fiber seed (negative values sit past
    // the symmetric point p_i, on the stable side). Any placement yields a
    // valid channel with the same scattering map theta -> theta - 2 omega_i
    // (angles are taken mod 2 pi), but the derivative of the generating
    // function is NOT invariant under it: sliding the window by one period
    // shifts the perturbation phase seen during the homoclinic excursion by
    // the orbit period, which is incommensurate with 2 pi. The defaults in
    // standard_channels() are chosen so the four channels jointly give the
    // sign cover with the largest worst-case margin over the family interval.
    int window_shift = 0;

    bool contains(double theta) const { return theta > theta_lo && theta < theta_hi; }

    /// theta shifted by a multiple of 2 pi into the open domain, if possible.
    /// Domains wider than 2 pi (diagnostic use) pass theta through unchanged.
    std::optional<double> representative(double theta) const {
        const double two_pi = 2.0 * M_PI;
        if (theta_hi - theta_lo > two_pi * (1.0 + 1e-12)) return theta;
        const double cand = theta + two_pi * std::ceil((theta_lo - theta) / two_pi);
        if (contains(cand)) return cand;
        if (contains(cand + two_pi)) return cand + two_pi;
        return std::nullopt;
    }
};

/// The four channels Gamma^{i,j}: j=1 over (-2pi + pi/8, pi/8), j=2 over (0, 2pi).
std::array<HomoclinicChannel, 4> standard_channels();

/// Flat record for table export (one row per (x*, branch)).
struct HomoclinicRecord {
    double x_star = 0.0;
    HomoclinicPoint point;
    ChannelSpans spans;
    TransversalityReport transversality;
};

}  // namespace r3bp

#endif
