#include "isac_coop/crlb.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "isac_coop/errors.hpp"
#include "isac_coop/threading.hpp"

namespace isac {

namespace {

// Central difference of (Psi x) w.r.t. one of (f_D, tau) with step `s`.
std::vector<cplx> psi_x_central_diff(const ChannelOperator& op, const DelayDopplerFrame& x,
                                     bool wrt_doppler, double s) {
    const double f_plus = wrt_doppler ? op.f_d + s : op.f_d;
    const double f_minus = wrt_doppler ? op.f_d - s : op.f_d;
    const double t_plus = wrt_doppler ? op.tau : op.tau + s;
    const double t_minus = wrt_doppler ? op.tau : op.tau - s;
    if (!wrt_doppler && (t_minus < 0.0 || t_plus >= op.params.slot_time))
        throw NumericError("fim_per_bs: delay too close to the [0, T) boundary for the "
                           "finite-difference stencil");
    const ChannelOperator op_p(op.params, f_plus, t_plus, op.phi, op.support_halfwidth);
    const ChannelOperator op_m(op.params, f_minus, t_minus, op.phi, op.support_halfwidth);
    const DelayDopplerFrame up = apply_channel_fast(op_p, x);
    const DelayDopplerFrame um = apply_channel_fast(op_m, x);
    std::vector<cplx> d(up.data().size());
    const double inv = 1.0 / (2.0 * s);
    for (size_t i = 0; i < d.size(); ++i) d[i] = (up.data()[i] - um.data()[i]) * inv;
    return d;
}

double rel_l2_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

// Validated derivative of (Psi x): compares steps s and s/2.
std::vector<cplx> validated_diff(const ChannelOperator& op, const DelayDopplerFrame& x,
                                 bool wrt_doppler, double s, double& richardson) {
    std::vector<cplx> d_full = psi_x_central_diff(op, x, wrt_doppler, s);
    std::vector<cplx> d_half = psi_x_central_diff(op, x, wrt_doppler, 0.5 * s);
    richardson = rel_l2_diff(d_full, d_half);
    if (!(richardson < 1e-4)) {
        std::ostringstream msg;
        msg << "fim_per_bs: central-difference validation failed for "
            << (wrt_doppler ? "f_D" : "tau") << " (step " << s << ", relative change "
            << richardson << " on halving; f_D=" << op.f_d << ", tau=" << op.tau << ")";
        throw NumericError(msg.str());
    }
    return d_full;
}

} // namespace

std::vector<cplx> mu_elements(const ChannelOperator& op, cplx h, const DelayDopplerFrame& x) {
    std::vector<cplx> mu = apply_G(op, x);
    for (cplx& v : mu) v *= h;
    return mu;
}

PerBsFim fim_per_bs(const ChannelOperator& op, cplx h, const DelayDopplerFrame& x,
                    FimDiagnostics* diag) {
    const OtfsParams& p = op.params;
    const double sigma2 = p.noise_var();
    if (!(sigma2 > 0.0))
        throw ConfigError("fim_per_bs: noise variance must be > 0");
    const double beta = std::abs(h);
    if (!(beta > 0.0))
        throw NumericError("fim_per_bs: channel coefficient magnitude must be > 0");
    const cplx phase = h / beta; // e^{j varphi}

    const int mn = p.frame_size();
    const int n_rx = p.n_rx;
    const size_t total = static_cast<size_t>(mn) * n_rx;
    const std::vector<cplx> b = array_response(op.phi, n_rx);
    const DelayDopplerFrame u_frame = apply_channel_fast(op, x);
    const std::vector<cplx>& u = u_frame.data();

    FimDiagnostics local_diag;
    const std::vector<cplx> du_f =
        validated_diff(op, x, true, 1e-4 * p.doppler_resolution(), local_diag.richardson_f_d);
    const std::vector<cplx> du_t =
        validated_diff(op, x, false, 1e-4 * p.delay_resolution(), local_diag.richardson_tau);
    if (diag) *diag = local_diag;

    // Derivative vectors over [beta, phase, f_D, tau, phi], antenna-major.
    std::vector<std::vector<cplx>> deriv(5, std::vector<cplx>(total));
    const double centre = 0.5 * (n_rx - 1);
    const double cos_phi = std::cos(op.phi);
    for (int j = 0; j < n_rx; ++j) {
        const cplx bj = b[static_cast<size_t>(j)];
        const cplx base = phase * bj;             // e^{j varphi} b_j
        const cplx hbj = h * bj;                  // beta e^{j varphi} b_j
        const cplx dphi_factor = hbj * cplx(0.0, M_PI * (j - centre) * cos_phi);
        cplx* d_beta = deriv[0].data() + static_cast<size_t>(j) * mn;
        cplx* d_phase = deriv[1].data() + static_cast<size_t>(j) * mn;
        cplx* d_fd = deriv[2].data() + static_cast<size_t>(j) * mn;
        cplx* d_tau = deriv[3].data() + static_cast<size_t>(j) * mn;
        cplx* d_phi = deriv[4].data() + static_cast<size_t>(j) * mn;
        for (int r = 0; r < mn; ++r) {
            const cplx ur = u[static_cast<size_t>(r)];
            d_beta[r] = base * ur;
            d_phase[r] = cplx(0.0, 1.0) * hbj * ur;
            d_fd[r] = hbj * du_f[static_cast<size_t>(r)];
            d_tau[r] = hbj * du_t[static_cast<size_t>(r)];
            d_phi[r] = dphi_factor * ur;
        }
    }

    PerBsFim fim;
    for (int q = 0; q < 5; ++q) {
        for (int pcol = q; pcol < 5; ++pcol) {
            cplx acc(0.0, 0.0);
            const cplx* a = deriv[static_cast<size_t>(q)].data();
            const cplx* c = deriv[static_cast<size_t>(pcol)].data();
            for (size_t i = 0; i < total; ++i) acc += std::conj(a[i]) * c[i];
            const double val = 2.0 / sigma2 * acc.real();
            fim.info(q, pcol) = val;
            fim.info(pcol, q) = val;
        }
    }
    return fim;
}

Efim2 efim_reduce(const PerBsFim& fim) {
    const Eigen::Matrix3d a = fim.info.topLeftCorner<3, 3>();
    const Eigen::Matrix<double, 3, 2> b = fim.info.topRightCorner<3, 2>();
    const Eigen::Matrix2d c = fim.info.bottomRightCorner<2, 2>();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(a);
    const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    const double lmin = es.eigenvalues().cwiseAbs().minCoeff();
    if (!(lmin > 0.0) || lmax / lmin > 1e12)
        throw NumericError("efim_reduce: nuisance block is singular or near-singular "
                           "(condition number above 1e12)");
    const Eigen::Matrix<double, 3, 2> solved = a.ldlt().solve(b);
    Efim2 efim = c - b.transpose() * solved;
    // enforce exact symmetry of the Schur complement
    efim = 0.5 * (efim + efim.transpose()).eval();
    return efim;
}

Eigen::Matrix2d jacobian_m(const LocalPoint& p_local) {
    const double r = std::hypot(p_local.x, p_local.y);
    if (r == 0.0) throw GeometryError("jacobian_m: local point coincides with the array");
    Eigen::Matrix2d j;
    const double r2 = r * r;
    j(0, 0) = 2.0 * p_local.x / (kSpeedOfLight * r);
    j(0, 1) = 2.0 * p_local.y / (kSpeedOfLight * r);
    j(1, 0) = -p_local.y / r2;
    j(1, 1) = p_local.x / r2;
    return j;
}

Eigen::Matrix2d jacobian_n(double rotation) {
    Eigen::Matrix2d j;
    const double c = std::cos(rotation);
    const double s = std::sin(rotation);
    j(0, 0) = c;
    j(0, 1) = s;
    j(1, 0) = -s;
    j(1, 1) = c;
    return j;
}

CoopPosFim coop_fim(const std::vector<Efim2>& efims, const std::vector<BsSite>& sites,
                    double px, double py) {
    if (efims.empty() || efims.size() != sites.size())
        throw ConfigError("coop_fim: need one EFIM per site");
    CoopPosFim total = CoopPosFim::Zero();
    for (size_t i = 0; i < sites.size(); ++i) {
        const LocalPoint local = to_local(px, py, sites[i]);
        const Eigen::Matrix2d jm = jacobian_m(local);
        const Eigen::Matrix2d jn = jacobian_n(sites[i].rotation);
        total += jn.transpose() * (jm.transpose() * efims[i] * jm) * jn;
    }
    return total;
}

double peb(const CoopPosFim& fim) {
    const double det = fim(0, 0) * fim(1, 1) - fim(0, 1) * fim(1, 0);
    if (!(det > 0.0) || !std::isfinite(det))
        throw NumericError("peb: position information matrix is singular");
    const double trace_inv = (fim(0, 0) + fim(1, 1)) / det;
    if (!(trace_inv > 0.0))
        throw NumericError("peb: position information matrix is not positive definite");
    return std::sqrt(trace_inv);
}

Efim2 efim_at_position(const BoundScene& scene, const BsSite& site, double px, double py,
                       FimDiagnostics* diag) {
    TargetState tgt = scene.target;
    tgt.x = px;
    tgt.y = py;
    const RadialParams radial = radial_params(tgt, site, scene.params);
    if (!(radial.tau < scene.params.slot_time))
        throw GeometryError("efim_at_position: delay exceeds the slot duration");
    const cplx gamma = scene.beamformer.gain_at(radial.phi);
    const LinkBudget lb = LinkBudget::make(scene.params, scene.antenna_gain, scene.target.rcs,
                                           radial.range, gamma, radial.f_d, radial.tau,
                                           /*alpha_phase=*/0.0);
    // The FIM is invariant to the coefficient phase; beta = |h| is what counts.
    const cplx h(std::abs(lb.h), 0.0);
    const ChannelOperator op(scene.params, radial.f_d, radial.tau, radial.phi,
                             scene.support_halfwidth);
    return efim_reduce(fim_per_bs(op, h, scene.frame, diag));
}

CoopPosFim coop_fim_at_position(const BoundScene& scene, const std::vector<BsSite>& sites,
                                double px, double py) {
    std::vector<Efim2> efims;
    efims.reserve(sites.size());
    for (const BsSite& site : sites) efims.push_back(efim_at_position(scene, site, px, py));
    return coop_fim(efims, sites, px, py);
}

BsPositionInfoField bs_position_info_field(const BoundScene& scene, const BsSite& site,
                                           const RoiGrid& roi, int threads) {
    roi.validate();
    BsPositionInfoField field;
    field.grid = roi;
    const int64_t n = roi.pixel_count();
    field.info.assign(static_cast<size_t>(n), {0.0, 0.0, 0.0});
    field.flags.assign(static_cast<size_t>(n), 0);
    const int nx = roi.nx();

    parallel_for(n, threads, [&](int64_t begin, int64_t end, int /*chunk*/) {
        for (int64_t px_idx = begin; px_idx < end; ++px_idx) {
            const double cx = roi.x_at(static_cast<int>(px_idx % nx));
            const double cy = roi.y_at(static_cast<int>(px_idx / nx));
            const LocalPoint local = to_local(cx, cy, site);
            const double r = std::hypot(local.x, local.y);
            if (!(local.x > 0.0) || r == 0.0 ||
                !(2.0 * r / kSpeedOfLight < scene.params.slot_time)) {
                field.flags[static_cast<size_t>(px_idx)] = 1;
                continue;
            }
            try {
                const Efim2 efim = efim_at_position(scene, site, cx, cy);
                const Eigen::Matrix2d jm = jacobian_m(local);
                const Eigen::Matrix2d jn = jacobian_n(site.rotation);
                const Eigen::Matrix2d contrib =
                    jn.transpose() * (jm.transpose() * efim * jm) * jn;
                field.info[static_cast<size_t>(px_idx)] = {contrib(0, 0), contrib(0, 1),
                                                           contrib(1, 1)};
            } catch (const GeometryError&) {
                field.flags[static_cast<size_t>(px_idx)] = 1;
            } catch (const NumericError&) {
                field.flags[static_cast<size_t>(px_idx)] = 2;
            }
        }
    });
    return field;
}

PebMap combine_peb_map(const RoiGrid& roi,
                       const std::vector<const BsPositionInfoField*>& fields) {
    if (fields.empty()) throw ConfigError("combine_peb_map: need at least one field");
    PebMap map;
    map.grid = roi;
    const int64_t n = roi.pixel_count();
    map.values.assign(static_cast<size_t>(n), std::numeric_limits<double>::quiet_NaN());
    map.flags.assign(static_cast<size_t>(n), 0);
    for (int64_t px = 0; px < n; ++px) {
        uint8_t flag = 0;
        double xx = 0.0, xy = 0.0, yy = 0.0;
        for (const BsPositionInfoField* f : fields) {
            const uint8_t fl = f->flags[static_cast<size_t>(px)];
            if (fl != 0) {
                flag = std::max(flag, fl);
                continue;
            }
            const auto& c = f->info[static_cast<size_t>(px)];
            xx += c[0];
            xy += c[1];
            yy += c[2];
        }
        if (flag != 0) {
            map.flags[static_cast<size_t>(px)] = flag;
            if (flag == 1) ++map.excluded_pixels;
            else ++map.failed_pixels;
            continue;
        }
        CoopPosFim fim;
        fim << xx, xy, xy, yy;
        try {
            map.values[static_cast<size_t>(px)] = peb(fim);
        } catch (const NumericError&) {
            map.flags[static_cast<size_t>(px)] = 2;
            ++map.failed_pixels;
        }
    }
    return map;
}

PebMap peb_map(const BoundScene& scene, const std::vector<BsSite>& sites, const RoiGrid& roi,
               int threads) {
    std::vector<BsPositionInfoField> fields;
    fields.reserve(sites.size());
    for (const BsSite& site : sites)
        fields.push_back(bs_position_info_field(scene, site, roi, threads));
    std::vector<const BsPositionInfoField*> ptrs;
    ptrs.reserve(fields.size());
    for (const auto& f : fields) ptrs.push_back(&f);
    return combine_peb_map(roi, ptrs);
}

} // namespace isac
