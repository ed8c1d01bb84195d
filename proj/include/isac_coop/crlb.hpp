#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "isac_coop/estimator.hpp"
#include "isac_coop/scene.hpp"

namespace isac {

/// 5x5 Fisher information over theta = [beta, phase, f_D, tau, phi].
struct PerBsFim {
    Eigen::Matrix<double, 5, 5> info;
};

/// 2x2 equivalent Fisher information over (tau, phi).
using Efim2 = Eigen::Matrix2d;
/// 2x2 Fisher information over the common-frame position (x, y).
using CoopPosFim = Eigen::Matrix2d;

/// Noiseless received mean mu[k,l,j] = h b_j(phi) (Psi x)[k,l], flattened in
/// the same order as apply_G (antenna-major blocks of MN).
std::vector<cplx> mu_elements(const ChannelOperator& op, cplx h, const DelayDopplerFrame& x);

struct FimDiagnostics {
    double richardson_f_d = 0.0; // relative change of the f_D derivative on halving
    double richardson_tau = 0.0;
};

/// Assembles the 5x5 FIM. beta/phase/angle derivatives are analytic; f_D and
/// tau derivatives use central differences with steps 1e-4 * resolution,
/// validated by halving (relative change < 1e-4, else NumericError).
PerBsFim fim_per_bs(const ChannelOperator& op, cplx h, const DelayDopplerFrame& x,
                    FimDiagnostics* diag = nullptr);

/// Schur complement C - B^T A^-1 B of the nuisance block. Throws NumericError
/// when cond(A) exceeds 1e12.
Efim2 efim_reduce(const PerBsFim& fim);

/// d(tau, phi)/d(x_local, y_local) at a local point.
Eigen::Matrix2d jacobian_m(const LocalPoint& p_local);
/// d(x_local, y_local)/d(x, y): the frame rotation.
Eigen::Matrix2d jacobian_n(double rotation);

/// I_e(p) = sum_i J_n^T (J_m^T EFIM_i J_m) J_n with J_m at p's local
/// coordinates for each site.
CoopPosFim coop_fim(const std::vector<Efim2>& efims, const std::vector<BsSite>& sites,
                    double px, double py);

/// sqrt(Tr(I_e^-1)). Throws NumericError for a singular matrix.
double peb(const CoopPosFim& fim);

/// Inputs shared by bound evaluations: everything except the hypothesised
/// target position.
struct BoundScene {
    OtfsParams params;
    double antenna_gain = 1.0;
    Beamformer beamformer;
    TargetState target;          // velocity and RCS are taken from here
    DelayDopplerFrame frame;     // canonical payload frame
    int support_halfwidth = kDefaultSupportHalfwidth;

    BoundScene(const OtfsParams& p, double gain, Beamformer bf, TargetState t,
               DelayDopplerFrame f, int halfwidth)
        : params(p), antenna_gain(gain), beamformer(std::move(bf)), target(t),
          frame(std::move(f)), support_halfwidth(halfwidth) {}
};

/// Per-BS EFIM with the target hypothesised at (px, py); beta follows the
/// link budget at that geometry, the coefficient phase drops out of the FIM.
Efim2 efim_at_position(const BoundScene& scene, const BsSite& site, double px, double py,
                       FimDiagnostics* diag = nullptr);

CoopPosFim coop_fim_at_position(const BoundScene& scene, const std::vector<BsSite>& sites,
                                double px, double py);

/// Position error bound field over the RoI; per-configuration (BS subset).
/// Pixel flags: 0 ok, 1 excluded (behind an array), 2 evaluation failed.
struct PebMap {
    RoiGrid grid;
    std::vector<double> values;
    std::vector<uint8_t> flags;
    int64_t excluded_pixels = 0;
    int64_t failed_pixels = 0;
};

/// Per-site position-information field, reusable across subsets: entries are
/// the symmetric 2x2 J^T EFIM J contribution at each pixel.
struct BsPositionInfoField {
    RoiGrid grid;
    std::vector<std::array<double, 3>> info; // (xx, xy, yy)
    std::vector<uint8_t> flags;
};

BsPositionInfoField bs_position_info_field(const BoundScene& scene, const BsSite& site,
                                           const RoiGrid& roi, int threads = 1);

PebMap combine_peb_map(const RoiGrid& roi,
                       const std::vector<const BsPositionInfoField*>& fields);

PebMap peb_map(const BoundScene& scene, const std::vector<BsSite>& sites, const RoiGrid& roi,
               int threads = 1);

} // namespace isac
