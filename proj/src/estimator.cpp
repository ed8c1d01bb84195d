#include "isac_coop/estimator.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "isac_coop/errors.hpp"
#include "isac_coop/threading.hpp"

namespace isac {

namespace {

std::vector<double> linspace_by_step(double lo, double hi, double step, const char* what) {
    if (!(step > 0.0)) throw ConfigError(std::string(what) + ": step must be > 0");
    if (hi < lo) throw ConfigError(std::string(what) + ": empty range");
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = lo + i * step;
    return v;
}

void fill_steering(double phi, int n_elems, cplx* out) {
    const double s = std::sin(phi);
    const double centre = 0.5 * (n_elems - 1);
    for (int q = 0; q < n_elems; ++q) {
        const double ph = M_PI * (q - centre) * s;
        out[q] = cplx(std::cos(ph), std::sin(ph));
    }
}

} // namespace

std::vector<double> CoarseGrid::doppler_values(const OtfsParams& params) const {
    return linspace_by_step(f_d_min, f_d_max, c_fdopp * params.doppler_resolution(),
                            "CoarseGrid doppler");
}

std::vector<double> CoarseGrid::delay_values(const OtfsParams& params) const {
    return linspace_by_step(tau_min, tau_max, c_tau * params.delay_resolution(),
                            "CoarseGrid delay");
}

std::vector<double> CoarseGrid::angle_values() const {
    if (!(beamwidth > 0.0)) throw ConfigError("CoarseGrid: beamwidth must be > 0");
    return linspace_by_step(phi_min, phi_max, c_phi * beamwidth, "CoarseGrid angle");
}

int RoiGrid::nx() const { return static_cast<int>(std::floor((x_max - x_min) / dx + 1e-9)) + 1; }
int RoiGrid::ny() const { return static_cast<int>(std::floor((y_max - y_min) / dy + 1e-9)) + 1; }

void RoiGrid::validate() const {
    if (!(dx > 0.0) || !(dy > 0.0)) throw ConfigError("RoiGrid: pixel steps must be > 0");
    if (x_max < x_min || y_max < y_min) throw ConfigError("RoiGrid: empty extent");
}

RoiGrid RoiGrid::recentred(double cx, double cy) const {
    const double hx = 0.5 * (x_max - x_min);
    const double hy = 0.5 * (y_max - y_min);
    RoiGrid g = *this;
    g.x_min = cx - hx;
    g.x_max = cx + hx;
    g.y_min = cy - hy;
    g.y_max = cy + hy;
    return g;
}

ObjectiveEvaluator::ObjectiveEvaluator(const OtfsParams& params, std::span<const cplx> y,
                                       const DelayDopplerFrame& x, int support_halfwidth)
    : params_(params), halfwidth_(support_halfwidth) {
    const int mn = params.frame_size();
    if (x.delay_bins() != params.m_subcarriers || x.doppler_bins() != params.n_slots)
        throw ConfigError("ObjectiveEvaluator: frame dimensions do not match params");
    if (static_cast<int>(y.size()) != mn * params.n_rx)
        throw ConfigError("ObjectiveEvaluator: received vector length must be MN * N_R");
    if (halfwidth_ < 1 || halfwidth_ > params.m_subcarriers)
        throw ConfigError("ObjectiveEvaluator: support_halfwidth must lie in [1, M]");
    if (!(x.energy() > 0.0))
        throw NumericError("ObjectiveEvaluator: zero frame makes the objective undefined");

    auto engine = fft_engine(params.m_subcarriers, params.n_slots);
    std::vector<cplx> scratch(static_cast<size_t>(mn));
    x_tf_.resize(static_cast<size_t>(mn));
    engine->dd_to_tf_raw(x.data().data(), x_tf_.data(), scratch.data());
    y_tf_.resize(static_cast<size_t>(mn) * params.n_rx);
    for (int j = 0; j < params.n_rx; ++j)
        engine->dd_to_tf_raw(y.data() + static_cast<size_t>(j) * mn,
                             y_tf_.data() + static_cast<size_t>(j) * mn, scratch.data());
    roots_ = detail::unit_roots_neg(params.m_subcarriers);
}

ObjectiveEvaluator::Scratch ObjectiveEvaluator::make_scratch() const {
    Scratch s;
    const size_t mn = static_cast<size_t>(params_.frame_size());
    s.mixed.resize(mn);
    s.inner.resize(static_cast<size_t>(params_.n_rx));
    s.steering.resize(static_cast<size_t>(params_.n_rx));
    return s;
}

void ObjectiveEvaluator::ensure_mixed(double f_d, double tau, Scratch& s) const {
    if (s.mixed_valid && s.mixed_f_d == f_d && s.mixed_tau == tau) return;
    if (!(tau >= 0.0) || !(tau < params_.slot_time))
        throw ConfigError("ObjectiveEvaluator: delay hypothesis outside [0, T)");
    if (!s.fold_valid || s.folded_f_d != f_d) {
        s.doppler_samp = detail::doppler_samples(params_, f_d);
        s.slot_ph = detail::slot_phases(params_, f_d);
        s.folded_f_d = f_d;
        s.fold_valid = true;
    }
    detail::ambiguity_taps(params_, tau, halfwidth_, s.doppler_samp.data(), roots_.data(),
                           s.kernel);
    s.delay_ph = detail::delay_phases(params_, tau);
    detail::mix_into(params_, s.kernel, s.slot_ph.data(), s.delay_ph.data(), x_tf_.data(),
                     s.mixed.data());

    const int mn = params_.frame_size();
    double norm_sq = 0.0;
    for (int r = 0; r < mn; ++r) norm_sq += std::norm(s.mixed[static_cast<size_t>(r)]);
    s.mixed_norm_sq = norm_sq;

    // Per-antenna inner products c_j = y_j^H (Psi x); the TF images are used
    // since the DD <-> TF map is unitary.
    Eigen::Map<const Eigen::MatrixXcd> ytf(y_tf_.data(), mn, params_.n_rx);
    Eigen::Map<const Eigen::VectorXcd> v(s.mixed.data(), mn);
    Eigen::Map<Eigen::VectorXcd> inner(s.inner.data(), params_.n_rx);
    inner = ytf.adjoint() * v;

    s.mixed_f_d = f_d;
    s.mixed_tau = tau;
    s.mixed_valid = true;
}

cplx ObjectiveEvaluator::correlation(double f_d, double tau, double phi, double& gx_norm_sq,
                                     Scratch& s) const {
    ensure_mixed(f_d, tau, s);
    fill_steering(phi, params_.n_rx, s.steering.data());
    cplx acc(0.0, 0.0);
    for (int j = 0; j < params_.n_rx; ++j)
        acc += s.steering[static_cast<size_t>(j)] * s.inner[static_cast<size_t>(j)];
    gx_norm_sq = params_.n_rx * s.mixed_norm_sq;
    return acc;
}

double ObjectiveEvaluator::objective(double f_d, double tau, double phi, Scratch& s) const {
    double gx_norm_sq = 0.0;
    const cplx corr = correlation(f_d, tau, phi, gx_norm_sq, s);
    if (!(gx_norm_sq > 0.0))
        throw NumericError("ObjectiveEvaluator: ||G x|| vanished for this hypothesis");
    return std::norm(corr) / gx_norm_sq;
}

void ObjectiveEvaluator::objective_batch(double f_d, double tau, std::span<const double> phis,
                                         std::span<double> out, Scratch& s) const {
    ensure_mixed(f_d, tau, s);
    if (!(s.mixed_norm_sq > 0.0))
        throw NumericError("ObjectiveEvaluator: ||G x|| vanished for this hypothesis");
    const double gx_norm_sq = params_.n_rx * s.mixed_norm_sq;
    for (size_t p = 0; p < phis.size(); ++p) {
        fill_steering(phis[p], params_.n_rx, s.steering.data());
        cplx acc(0.0, 0.0);
        for (int j = 0; j < params_.n_rx; ++j)
            acc += s.steering[static_cast<size_t>(j)] * s.inner[static_cast<size_t>(j)];
        out[p] = std::norm(acc) / gx_norm_sq;
    }
}

cplx channel_coeff_ml(std::span<const cplx> y, const ChannelOperator& op,
                      const DelayDopplerFrame& x) {
    if (!(x.energy() > 0.0))
        throw NumericError("channel_coeff_ml: zero frame makes the coefficient undefined");
    const std::vector<cplx> gx = apply_G(op, x);
    if (y.size() != gx.size())
        throw ConfigError("channel_coeff_ml: received vector length must be MN * N_R");
    cplx num(0.0, 0.0);
    double den = 0.0;
    for (size_t i = 0; i < gx.size(); ++i) {
        num += std::conj(gx[i]) * y[i];
        den += std::norm(gx[i]);
    }
    if (!(den > 0.0))
        throw NumericError("channel_coeff_ml: ||G x|| vanished");
    return num / den;
}

double single_bs_objective(std::span<const cplx> y, const ChannelOperator& op,
                           const DelayDopplerFrame& x) {
    ObjectiveEvaluator eval(op.params, y, x, op.support_halfwidth);
    ObjectiveEvaluator::Scratch s = eval.make_scratch();
    return eval.objective(op.f_d, op.tau, op.phi, s);
}

CoarseEstimate coarse_estimate(const OtfsParams& params, std::span<const cplx> y,
                               const DelayDopplerFrame& x, const CoarseGrid& grid,
                               int support_halfwidth) {
    const std::vector<double> dopplers = grid.doppler_values(params);
    const std::vector<double> delays = grid.delay_values(params);
    const std::vector<double> angles = grid.angle_values();
    ObjectiveEvaluator eval(params, y, x, support_halfwidth);
    ObjectiveEvaluator::Scratch s = eval.make_scratch();
    std::vector<double> vals(angles.size());

    CoarseEstimate best;
    double best_val = -1.0;
    for (double f_d : dopplers) {
        for (double tau : delays) {
            eval.objective_batch(f_d, tau, angles, vals, s);
            for (size_t p = 0; p < angles.size(); ++p) {
                if (vals[p] > best_val) { // strict: first tuple wins ties
                    best_val = vals[p];
                    best = {f_d, tau, angles[p], vals[p]};
                }
            }
        }
    }
    return best;
}

FusionResult fuse_position_ml(const OtfsParams& params,
                              const std::vector<BsObservation>& observations,
                              const RoiGrid& roi, int support_halfwidth, int threads) {
    if (observations.empty())
        throw ConfigError("fuse_position_ml: at least one BS observation required");
    roi.validate();
    const int n_bs = static_cast<int>(observations.size());
    const int nx = roi.nx();
    const int64_t n_pixels = roi.pixel_count();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    std::vector<ObjectiveEvaluator> evals;
    evals.reserve(static_cast<size_t>(n_bs));
    for (const BsObservation& obs : observations)
        evals.emplace_back(params, std::span<const cplx>(obs.y), obs.x, support_halfwidth);

    FusionResult result;
    result.fused.grid = roi;
    result.fused.bs_index = -1;
    result.fused.values.assign(static_cast<size_t>(n_pixels), nan);
    result.fused.excluded.assign(static_cast<size_t>(n_pixels), 0);
    result.per_bs.resize(static_cast<size_t>(n_bs));
    for (int b = 0; b < n_bs; ++b) {
        result.per_bs[static_cast<size_t>(b)].grid = roi;
        result.per_bs[static_cast<size_t>(b)].bs_index = observations[static_cast<size_t>(b)].site.index;
        result.per_bs[static_cast<size_t>(b)].values.assign(static_cast<size_t>(n_pixels), nan);
        result.per_bs[static_cast<size_t>(b)].excluded.assign(static_cast<size_t>(n_pixels), 0);
    }

    parallel_for(n_pixels, threads, [&](int64_t begin, int64_t end, int /*chunk*/) {
        std::vector<ObjectiveEvaluator::Scratch> scratch;
        scratch.reserve(static_cast<size_t>(n_bs));
        for (int b = 0; b < n_bs; ++b) scratch.push_back(evals[static_cast<size_t>(b)].make_scratch());
        for (int64_t px = begin; px < end; ++px) {
            const int ix = static_cast<int>(px % nx);
            const int iy = static_cast<int>(px / nx);
            const double cx = roi.x_at(ix);
            const double cy = roi.y_at(iy);
            bool all_visible = true;
            double fused_val = 0.0;
            for (int b = 0; b < n_bs; ++b) {
                const BsObservation& obs = observations[static_cast<size_t>(b)];
                const LocalPoint local = to_local(cx, cy, obs.site);
                const double r = std::hypot(local.x, local.y);
                const double tau = 2.0 * r / kSpeedOfLight;
                if (!(local.x > 0.0) || r == 0.0 || !(tau < params.slot_time)) {
                    result.per_bs[static_cast<size_t>(b)].excluded[static_cast<size_t>(px)] = 1;
                    all_visible = false;
                    continue;
                }
                const double phi = std::atan2(local.y, local.x);
                const double val = evals[static_cast<size_t>(b)].objective(
                    obs.f_d_hat, tau, phi, scratch[static_cast<size_t>(b)]);
                result.per_bs[static_cast<size_t>(b)].values[static_cast<size_t>(px)] = val;
                fused_val += val;
            }
            if (all_visible) {
                result.fused.values[static_cast<size_t>(px)] = fused_val;
            } else {
                result.fused.excluded[static_cast<size_t>(px)] = 1;
            }
        }
    });

    // Sequential argmax; ties resolve to smallest x, then smallest y.
    double best = -std::numeric_limits<double>::infinity();
    double best_x = std::numeric_limits<double>::infinity();
    double best_y = std::numeric_limits<double>::infinity();
    int64_t n_excluded = 0;
    bool any = false;
    for (int64_t px = 0; px < n_pixels; ++px) {
        if (result.fused.excluded[static_cast<size_t>(px)]) {
            ++n_excluded;
            continue;
        }
        const double v = result.fused.values[static_cast<size_t>(px)];
        const double cx = roi.x_at(static_cast<int>(px % nx));
        const double cy = roi.y_at(static_cast<int>(px / nx));
        if (!any || v > best ||
            (v == best && (cx < best_x || (cx == best_x && cy < best_y)))) {
            best = v;
            best_x = cx;
            best_y = cy;
            any = true;
        }
    }
    if (!any)
        throw GeometryError("fuse_position_ml: every RoI pixel is excluded");
    result.x_hat = best_x;
    result.y_hat = best_y;
    result.peak_value = best;
    result.excluded_pixels = n_excluded;
    return result;
}

} // namespace isac
