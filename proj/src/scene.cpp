#include "isac_coop/scene.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "isac_coop/errors.hpp"
#include "isac_coop/rng.hpp"

namespace isac {

namespace {
double normalize_angle_2pi(double a) {
    const double two_pi = 2.0 * M_PI;
    double r = std::fmod(a, two_pi);
    if (r < 0.0) r += two_pi;
    return r;
}
} // namespace

BsSite::BsSite(double x_, double y_, double rotation_, int index_)
    : x(x_), y(y_), rotation(normalize_angle_2pi(rotation_)), index(index_) {}

TargetState::TargetState(double x_, double y_, double vx_, double vy_, double rcs_)
    : x(x_), y(y_), vx(vx_), vy(vy_), rcs(rcs_) {
    if (!(rcs > 0.0)) throw ConfigError("TargetState: radar cross-section must be > 0");
}

LocalPoint to_local(double px, double py, const BsSite& site) {
    const double xp = px - site.x;
    const double yp = py - site.y;
    const double c = std::cos(site.rotation);
    const double s = std::sin(site.rotation);
    return {xp * c + yp * s, -xp * s + yp * c};
}

void to_common(const LocalPoint& p, const BsSite& site, double& px, double& py) {
    const double c = std::cos(site.rotation);
    const double s = std::sin(site.rotation);
    px = p.x * c - p.y * s + site.x;
    py = p.x * s + p.y * c + site.y;
}

PolarParams to_polar(const LocalPoint& p) {
    const double r = std::hypot(p.x, p.y);
    if (r == 0.0) throw GeometryError("to_polar: point coincides with the array origin");
    if (p.x <= 0.0)
        throw GeometryError("to_polar: point lies behind the array (|phi| >= pi/2)");
    return {2.0 * r / kSpeedOfLight, std::atan2(p.y, p.x)};
}

RadialParams radial_params(const TargetState& target, const BsSite& site,
                           const OtfsParams& params) {
    const LocalPoint local = to_local(target.x, target.y, site);
    const PolarParams pol = to_polar(local);
    const double dx = target.x - site.x;
    const double dy = target.y - site.y;
    const double r = std::hypot(dx, dy);
    const double v_radial = (target.vx * dx + target.vy * dy) / r;
    const double f_d = 2.0 * v_radial * params.carrier_freq / kSpeedOfLight;
    return {f_d, pol.tau, pol.phi, r};
}

cplx Beamformer::gain_at(double phi) const {
    const std::vector<cplx> a = array_response(phi, static_cast<int>(weights.size()));
    cplx acc(0.0, 0.0);
    for (size_t q = 0; q < weights.size(); ++q) acc += std::conj(a[q]) * weights[q];
    return acc;
}

Beamformer design_sector_beamformer(const OtfsParams& params, double center, double width,
                                    int n_samples) {
    if (!(width > 0.0) || width > M_PI)
        throw ConfigError("design_sector_beamformer: width must lie in (0, pi]");
    if (std::abs(center) + 0.5 * width >= M_PI / 2.0 + 1e-12)
        throw ConfigError("design_sector_beamformer: sector exceeds the forward half-plane");
    const int nt = params.n_tx;
    const int ns = std::max(n_samples, 181);

    Eigen::MatrixXcd steering(ns, nt); // rows: a^H(phi_s)
    for (int s = 0; s < ns; ++s) {
        const double phi = center - 0.5 * width + width * s / (ns - 1);
        const std::vector<cplx> a = array_response(phi, nt);
        for (int q = 0; q < nt; ++q) steering(s, q) = std::conj(a[static_cast<size_t>(q)]);
    }

    // Alternating projections: fix desired phases from the current pattern,
    // re-fit weights in the least-squares sense, repeat. Minimum-norm solve
    // keeps the narrow-sector limit at the matched steering vector.
    Eigen::VectorXcd w(nt);
    {
        const std::vector<cplx> a0 = array_response(center, nt);
        for (int q = 0; q < nt; ++q)
            w(q) = a0[static_cast<size_t>(q)] / std::sqrt(static_cast<double>(nt));
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(steering);
    const int kIterations = 60;
    for (int it = 0; it < kIterations; ++it) {
        Eigen::VectorXcd pattern = steering * w;
        Eigen::VectorXcd desired(ns);
        for (int s = 0; s < ns; ++s) {
            const double mag = std::abs(pattern(s));
            desired(s) = mag > 0.0 ? pattern(s) / mag : cplx(1.0, 0.0);
        }
        w = cod.solve(desired);
    }
    w /= w.norm();

    Beamformer bf;
    bf.weights.assign(w.data(), w.data() + nt);
    bf.sector_center = center;
    bf.sector_width = width;
    double mean = 0.0, mn = 0.0, mx = 0.0;
    for (int s = 0; s < ns; ++s) {
        const double g = std::norm((steering.row(s) * w)(0));
        mean += g;
        if (s == 0) {
            mn = mx = g;
        } else {
            mn = std::min(mn, g);
            mx = std::max(mx, g);
        }
    }
    bf.mean_gain = mean / ns;
    bf.min_gain = mn;
    bf.max_gain = mx;
    return bf;
}

double LinkBudget::alpha_mag_for(double antenna_gain, double rcs, double carrier_freq,
                                 double range) {
    if (!(range > 0.0)) throw GeometryError("LinkBudget: range must be > 0");
    const double c2 = kSpeedOfLight * kSpeedOfLight;
    const double four_pi_cubed = 64.0 * M_PI * M_PI * M_PI;
    const double num = antenna_gain * antenna_gain * rcs * c2;
    const double den = four_pi_cubed * carrier_freq * carrier_freq *
                       range * range * range * range;
    return std::sqrt(num / den);
}

LinkBudget LinkBudget::make(const OtfsParams& params, double antenna_gain, double rcs,
                            double range, cplx gamma, double f_d, double tau,
                            double alpha_phase) {
    LinkBudget lb;
    lb.alpha_mag = alpha_mag_for(antenna_gain, rcs, params.carrier_freq, range);
    lb.alpha_phase = alpha_phase;
    lb.gamma = gamma;
    const cplx alpha = lb.alpha_mag * cplx(std::cos(alpha_phase), std::sin(alpha_phase));
    const double ph = 2.0 * M_PI * f_d * tau;
    lb.h = std::sqrt(params.avg_power()) * gamma * alpha * cplx(std::cos(ph), std::sin(ph));
    return lb;
}

RxSynthesis synthesize_rx(const OtfsParams& params, const BsSite& site,
                          const TargetState& target, double antenna_gain,
                          const Beamformer& beamformer, const DelayDopplerFrame& frame,
                          uint64_t noise_seed, int support_halfwidth) {
    if (frame.delay_bins() != params.m_subcarriers || frame.doppler_bins() != params.n_slots)
        throw ConfigError("synthesize_rx: frame dimensions do not match params");
    const RadialParams radial = radial_params(target, site, params);

    RandomStream stream(noise_seed);
    const double alpha_phase = 2.0 * M_PI * stream.next_uniform();
    const LinkBudget lb = LinkBudget::make(params, antenna_gain, target.rcs, radial.range,
                                           beamformer.gain_at(radial.phi), radial.f_d,
                                           radial.tau, alpha_phase);

    const ChannelOperator op(params, radial.f_d, radial.tau, radial.phi, support_halfwidth);
    std::vector<cplx> y = apply_G(op, frame);
    const double noise_var = params.noise_var();
    for (cplx& v : y) {
        v *= lb.h;
        if (noise_var > 0.0) v += stream.next_cnormal(noise_var);
    }
    return {std::move(y), lb.h, radial};
}

} // namespace isac
