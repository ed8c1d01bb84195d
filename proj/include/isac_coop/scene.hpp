#pragma once

#include <vector>

#include "isac_coop/channel_operator.hpp"
#include "isac_coop/frames.hpp"
#include "isac_coop/params.hpp"

namespace isac {

/// Base-station site in the common frame. rotation is the counterclockwise
/// rotation of the local frame w.r.t. the common one, normalized to [0, 2pi).
struct BsSite {
    double x = 0.0;
    double y = 0.0;
    double rotation = 0.0;
    int index = 0;

    BsSite() = default;
    BsSite(double x_, double y_, double rotation_, int index_ = 0);
};

struct TargetState {
    double x = 0.0;  // common frame [m]
    double y = 0.0;
    double vx = 0.0; // common frame [m/s]
    double vy = 0.0;
    double rcs = 1.0; // sigma [m^2], > 0

    TargetState() = default;
    TargetState(double x_, double y_, double vx_, double vy_, double rcs_);
};

struct LocalPoint {
    double x = 0.0;
    double y = 0.0;
};

struct PolarParams {
    double tau = 0.0; // round-trip delay [s]
    double phi = 0.0; // angle in (-pi/2, pi/2)
};

struct RadialParams {
    double f_d = 0.0;  // Doppler shift [Hz]
    double tau = 0.0;  // round-trip delay [s]
    double phi = 0.0;  // local angle [rad]
    double range = 0.0; // distance [m]
};

/// Translation then rotation into the site's local frame.
LocalPoint to_local(double px, double py, const BsSite& site);
/// Inverse of to_local.
void to_common(const LocalPoint& p, const BsSite& site, double& px, double& py);

/// Local cartesian -> (round-trip delay, angle). Throws GeometryError at the
/// origin or when the point lies behind the array (|phi| >= pi/2).
PolarParams to_polar(const LocalPoint& p);

/// Per-site target parameters: geometry from to_local/to_polar plus the
/// radial Doppler shift f_D = 2 v_r f_c / c.
RadialParams radial_params(const TargetState& target, const BsSite& site,
                           const OtfsParams& params);

/// Unit-norm transmit taper with near-constant gain across a circular sector.
struct Beamformer {
    std::vector<cplx> weights;    // length N_T, unit norm
    double sector_center = 0.0;   // [rad]
    double sector_width = 0.0;    // [rad]
    double mean_gain = 0.0;       // in-sector mean of |a^H(phi) w|^2
    double min_gain = 0.0;
    double max_gain = 0.0;

    /// Complex beamforming factor gamma = a^H(phi) w.
    cplx gain_at(double phi) const;
};

/// Least-squares flat-sector synthesis over >= n_samples in-sector angles
/// (alternating phase/weight updates, fixed iteration count). Narrow sectors
/// converge to the matched steering vector a(center)/sqrt(N_T).
Beamformer design_sector_beamformer(const OtfsParams& params, double center, double width,
                                    int n_samples = 181);

/// Radar link budget for one echo path.
struct LinkBudget {
    double alpha_mag = 0.0;   // |alpha| from the radar equation
    double alpha_phase = 0.0; // drawn per trial
    cplx gamma;               // a^H(phi) w_T
    cplx h;                   // sqrt(P_avg) * gamma * alpha * e^{j2pi f_D tau}

    /// |alpha|^2 = G^2 sigma c^2 / ((4 pi)^3 f_c^2 r^4)
    static double alpha_mag_for(double antenna_gain, double rcs, double carrier_freq,
                                double range);
    static LinkBudget make(const OtfsParams& params, double antenna_gain, double rcs,
                           double range, cplx gamma, double f_d, double tau,
                           double alpha_phase);
};

struct RxSynthesis {
    std::vector<cplx> y; // MN * N_R received samples, antenna-major blocks
    cplx h;              // realized channel coefficient
    RadialParams radial; // ground-truth per-site parameters
};

/// y = h G(f_D, tau, phi) x + nu with per-sample noise variance N0 * delta_f.
/// The alpha phase is drawn first from the seeded stream, then the noise.
/// Deterministic given (inputs, noise_seed).
RxSynthesis synthesize_rx(const OtfsParams& params, const BsSite& site,
                          const TargetState& target, double antenna_gain,
                          const Beamformer& beamformer, const DelayDopplerFrame& frame,
                          uint64_t noise_seed,
                          int support_halfwidth = kDefaultSupportHalfwidth);

} // namespace isac
