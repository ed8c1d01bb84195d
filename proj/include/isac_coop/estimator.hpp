#pragma once

#include <span>
#include <vector>

#include "isac_coop/channel_operator.hpp"
#include "isac_coop/frames.hpp"
#include "isac_coop/scene.hpp"

namespace isac {

/// Discrete per-BS search grid over (f_D, tau, phi). Steps are derived from
/// the waveform resolutions on demand: delta f_D = c_fdopp / (NT),
/// delta tau = c_tau / (M df), delta phi = c_phi * beamwidth.
struct CoarseGrid {
    double f_d_min = 0.0, f_d_max = 0.0;
    double tau_min = 0.0, tau_max = 0.0;
    double phi_min = 0.0, phi_max = 0.0;
    double c_fdopp = 0.25, c_tau = 1.0, c_phi = 0.25;
    double beamwidth = 0.0; // Delta Phi at broadside [rad]

    std::vector<double> doppler_values(const OtfsParams& params) const;
    std::vector<double> delay_values(const OtfsParams& params) const;
    std::vector<double> angle_values() const;
};

/// Region-of-interest node grid in the common frame. Nodes sit at
/// x_min + ix*dx, y_min + iy*dy with both endpoints included.
struct RoiGrid {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;
    double dx = 0.0, dy = 0.0;

    int nx() const;
    int ny() const;
    double x_at(int ix) const { return x_min + ix * dx; }
    double y_at(int iy) const { return y_min + iy * dy; }
    int64_t pixel_count() const { return static_cast<int64_t>(nx()) * ny(); }
    void validate() const;

    /// Same spacing and extent, translated so the box centre moves to (cx, cy).
    RoiGrid recentred(double cx, double cy) const;
};

/// Scalar field over the RoI. Row-major, y-outer/x-inner, origin at
/// (x_min, y_min): values[ix + nx*iy]. Excluded pixels hold NaN and are
/// flagged in `excluded`. bs_index is -1 for the fused map.
struct RadarMap {
    RoiGrid grid;
    std::vector<double> values;
    std::vector<uint8_t> excluded;
    int bs_index = -1;
};

/// Reduced ML objective |y^H G x|^2 / ||G x||^2 for one (y, x) pair.
///
/// Precomputes the TF-domain images of x and of each antenna block of y so
/// that a (f_D, tau) hypothesis costs one truncated mixing pass and the
/// angle sweep costs N_R operations per angle. Thread-safe after
/// construction; each thread uses its own Scratch.
class ObjectiveEvaluator {
public:
    ObjectiveEvaluator(const OtfsParams& params, std::span<const cplx> y,
                       const DelayDopplerFrame& x, int support_halfwidth);

    struct Scratch {
        std::vector<cplx> x_fold;     // Doppler-folded TF frame of x
        double folded_f_d = 0.0;
        bool fold_valid = false;
        std::vector<cplx> mixed;      // TF image of Psi x (before the inverse map)
        std::vector<cplx> inner;      // per-antenna inner products c_j
        std::vector<cplx> steering;
        MixKernel kernel;
        std::vector<cplx> doppler_samp;
        std::vector<cplx> slot_ph;
        std::vector<cplx> delay_ph;
        double mixed_norm_sq = 0.0;
        double mixed_f_d = 0.0, mixed_tau = 0.0;
        bool mixed_valid = false;
    };

    Scratch make_scratch() const;

    /// Objective at one tuple.
    double objective(double f_d, double tau, double phi, Scratch& s) const;
    /// Objective for several angles sharing (f_D, tau); out.size() == phis.size().
    void objective_batch(double f_d, double tau, std::span<const double> phis,
                         std::span<double> out, Scratch& s) const;
    /// y^H G x and ||G x||^2 at one tuple (used by the coefficient estimate).
    cplx correlation(double f_d, double tau, double phi, double& gx_norm_sq,
                     Scratch& s) const;

    const OtfsParams& params() const { return params_; }

private:
    void ensure_mixed(double f_d, double tau, Scratch& s) const;

    OtfsParams params_;
    int halfwidth_;
    std::vector<cplx> x_tf_;   // TF image of x
    std::vector<cplx> y_tf_;   // TF images of the N_R antenna blocks, concatenated
    std::vector<cplx> roots_;  // e^{-j2pi r/M}
};

/// Closed-form ML channel coefficient x^H G^H y / ||G x||^2, computed through
/// apply_G. Throws NumericError when ||G x|| vanishes (zero frame).
cplx channel_coeff_ml(std::span<const cplx> y, const ChannelOperator& op,
                      const DelayDopplerFrame& x);

/// Reduced single-BS ML objective |y^H G x|^2 / ||G x||^2.
double single_bs_objective(std::span<const cplx> y, const ChannelOperator& op,
                           const DelayDopplerFrame& x);

struct CoarseEstimate {
    double f_d = 0.0;
    double tau = 0.0;
    double phi = 0.0;
    double objective = 0.0;
};

/// Exhaustive maximization over the grid tuples. Ties break to the smallest
/// (f_D, then tau, then phi) index.
CoarseEstimate coarse_estimate(const OtfsParams& params, std::span<const cplx> y,
                               const DelayDopplerFrame& x, const CoarseGrid& grid,
                               int support_halfwidth = kDefaultSupportHalfwidth);

/// Per-BS inputs of the position-domain fusion stage.
struct BsObservation {
    BsSite site;
    std::vector<cplx> y;
    DelayDopplerFrame x;
    double f_d_hat = 0.0; // Doppler fixed from the coarse stage
};

struct FusionResult {
    double x_hat = 0.0;
    double y_hat = 0.0;
    double peak_value = 0.0;
    RadarMap fused;
    std::vector<RadarMap> per_bs;
    int64_t excluded_pixels = 0;
};

/// Cooperative position estimate: evaluates the per-BS objective at each RoI
/// node through the pixel's (tau_i, phi_i), sums across BSs and returns the
/// argmax node (ties to smallest x, then y). Pixels behind any array are
/// excluded and recorded. Deterministic for any thread count.
FusionResult fuse_position_ml(const OtfsParams& params,
                              const std::vector<BsObservation>& observations,
                              const RoiGrid& roi,
                              int support_halfwidth = kDefaultSupportHalfwidth,
                              int threads = 1);

} // namespace isac
