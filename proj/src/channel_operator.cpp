#include "isac_coop/channel_operator.hpp"

#include <cmath>

#include "isac_coop/errors.hpp"

namespace isac {

std::vector<cplx> array_response(double phi, int n_elems) {
    if (n_elems < 1) throw ConfigError("array_response: element count must be >= 1");
    std::vector<cplx> b(static_cast<size_t>(n_elems));
    const double s = std::sin(phi);
    const double centre = 0.5 * (n_elems - 1);
    for (int q = 0; q < n_elems; ++q) {
        const double ph = M_PI * (q - centre) * s;
        b[q] = cplx(std::cos(ph), std::sin(ph));
    }
    return b;
}

ChannelOperator::ChannelOperator(const OtfsParams& p, double f_d_, double tau_,
                                 double phi_, int support_halfwidth_)
    : params(p), f_d(f_d_), tau(tau_), phi(phi_), support_halfwidth(support_halfwidth_) {
    if (!(tau >= 0.0) || !(tau < p.slot_time))
        throw ConfigError("ChannelOperator: delay must satisfy 0 <= tau < T");
    if (support_halfwidth < 1 || support_halfwidth > p.m_subcarriers)
        throw ConfigError("ChannelOperator: support_halfwidth must lie in [1, M]");
}

namespace detail {

std::vector<cplx> unit_roots_neg(int m) {
    std::vector<cplx> r(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        const double ph = -2.0 * M_PI * i / m;
        r[i] = cplx(std::cos(ph), std::sin(ph));
    }
    return r;
}

std::vector<cplx> doppler_samples(const OtfsParams& params, double f_d) {
    const int m = params.m_subcarriers;
    const double dt = params.slot_time / m;
    std::vector<cplx> w(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        const double ph = 2.0 * M_PI * f_d * (i * dt);
        w[i] = cplx(std::cos(ph), std::sin(ph));
    }
    return w;
}

std::vector<cplx> slot_phases(const OtfsParams& params, double f_d) {
    std::vector<cplx> s(static_cast<size_t>(params.n_slots));
    for (int n = 0; n < params.n_slots; ++n) {
        const double ph = 2.0 * M_PI * n * params.slot_time * f_d;
        s[n] = cplx(std::cos(ph), std::sin(ph));
    }
    return s;
}

std::vector<cplx> delay_phases(const OtfsParams& params, double tau) {
    std::vector<cplx> d(static_cast<size_t>(params.m_subcarriers));
    for (int m = 0; m < params.m_subcarriers; ++m) {
        const double ph = -2.0 * M_PI * m * params.delta_f * tau;
        d[m] = cplx(std::cos(ph), std::sin(ph));
    }
    return d;
}

void ambiguity_taps(const OtfsParams& params, double tau, int halfwidth,
                    const cplx* doppler_samp, const cplx* roots_neg, MixKernel& out) {
    const int m = params.m_subcarriers;
    const double t_slot = params.slot_time;
    const double dt = t_slot / m;
    out.halfwidth = halfwidth;
    for (int d = 0; d < 2; ++d) {
        auto& taps = out.taps[d];
        taps.assign(static_cast<size_t>(2 * halfwidth + 1), cplx(0.0, 0.0));
        // Support window of g_tx(i dt - (d T - tau)); contiguous in i.
        const double shift = d * t_slot - tau;
        int i_lo = m, i_hi = -1;
        for (int i = 0; i < m; ++i) {
            const double s = i * dt - shift;
            if (s >= 0.0 && s < t_slot) {
                if (i < i_lo) i_lo = i;
                i_hi = i;
            }
        }
        if (i_hi < i_lo) continue; // no overlap, taps stay zero
        for (int delta = -halfwidth; delta <= halfwidth; ++delta) {
            cplx acc(0.0, 0.0);
            for (int i = i_lo; i <= i_hi; ++i) {
                const int r = static_cast<int>(((static_cast<long long>(delta) * i) % m + m) % m);
                acc += roots_neg[r] * doppler_samp[i];
            }
            taps[static_cast<size_t>(delta + halfwidth)] = acc / static_cast<double>(m);
        }
    }
}

void mix_into(const OtfsParams& p, const MixKernel& kernel, const cplx* slot_ph,
              const cplx* delay_ph, const cplx* x_tf, cplx* out) {
    const int m_count = p.m_subcarriers;
    const int n_count = p.n_slots;
    const int hw = kernel.halfwidth;
    std::fill(out, out + static_cast<size_t>(m_count) * n_count, cplx(0.0, 0.0));
    for (int n = 0; n < n_count; ++n) {
        cplx* dst = out + static_cast<size_t>(m_count) * n;
        for (int d = 0; d < 2; ++d) {
            const int src_slot = n - d;
            if (src_slot < 0) continue; // causal: slot 0 receives only its own symbol
            const cplx* src = x_tf + static_cast<size_t>(m_count) * src_slot;
            const cplx sp = slot_ph[src_slot];
            for (int delta = -hw; delta <= hw; ++delta) {
                const cplx tap = kernel.taps[d][static_cast<size_t>(delta + hw)] * sp;
                if (tap == cplx(0.0, 0.0)) continue;
                const int m_lo = std::max(0, delta);
                const int m_hi = std::min(m_count - 1, m_count - 1 + delta);
                for (int m = m_lo; m <= m_hi; ++m) dst[m] += tap * src[m - delta];
            }
        }
        for (int m = 0; m < m_count; ++m) dst[m] *= delay_ph[m];
    }
}

} // namespace detail

MixKernel build_mix_kernel(const OtfsParams& params, double f_d, double tau, int halfwidth) {
    const std::vector<cplx> roots = detail::unit_roots_neg(params.m_subcarriers);
    const std::vector<cplx> w = detail::doppler_samples(params, f_d);
    MixKernel kernel;
    detail::ambiguity_taps(params, tau, halfwidth, w.data(), roots.data(), kernel);
    return kernel;
}

TimeFrequencyFrame tf_channel_apply(const ChannelOperator& op, const TimeFrequencyFrame& X) {
    const OtfsParams& p = op.params;
    if (X.subcarriers() != p.m_subcarriers || X.slots() != p.n_slots)
        throw ConfigError("tf_channel_apply: frame dimensions do not match params");
    const MixKernel kernel = build_mix_kernel(p, op.f_d, op.tau, op.support_halfwidth);
    const std::vector<cplx> slot_ph = detail::slot_phases(p, op.f_d);
    const std::vector<cplx> delay_ph = detail::delay_phases(p, op.tau);
    TimeFrequencyFrame out(p.n_slots, p.m_subcarriers);
    detail::mix_into(p, kernel, slot_ph.data(), delay_ph.data(), X.data().data(),
                     out.data().data());
    return out;
}

DelayDopplerFrame apply_channel_fast(const ChannelOperator& op, const DelayDopplerFrame& x) {
    const OtfsParams& p = op.params;
    if (x.delay_bins() != p.m_subcarriers || x.doppler_bins() != p.n_slots)
        throw ConfigError("apply_channel_fast: frame dimensions do not match params");
    return sfft_to_dd(tf_channel_apply(op, isfft_to_tf(x)));
}

Eigen::MatrixXcd build_psi_dense(const ChannelOperator& op, int cap) {
    const OtfsParams& p = op.params;
    const int size = p.frame_size();
    if (size > cap)
        throw ConfigError(
            "build_psi_dense: M*N exceeds the dense cap; use apply_channel_fast instead");
    // Exact operator regardless of the configured truncation.
    ChannelOperator exact(p, op.f_d, op.tau, op.phi, p.m_subcarriers);
    Eigen::MatrixXcd psi(size, size);
    DelayDopplerFrame basis(p.m_subcarriers, p.n_slots);
    for (int col = 0; col < size; ++col) {
        std::fill(basis.data().begin(), basis.data().end(), cplx(0.0, 0.0));
        basis.data()[static_cast<size_t>(col)] = cplx(1.0, 0.0);
        const DelayDopplerFrame img = apply_channel_fast(exact, basis);
        for (int row = 0; row < size; ++row) psi(row, col) = img.data()[static_cast<size_t>(row)];
    }
    return psi;
}

std::vector<cplx> apply_G(const ChannelOperator& op, const DelayDopplerFrame& x) {
    const DelayDopplerFrame u = apply_channel_fast(op, x);
    const std::vector<cplx> b = array_response(op.phi, op.params.n_rx);
    const int mn = op.params.frame_size();
    std::vector<cplx> out(static_cast<size_t>(mn) * op.params.n_rx);
    for (int j = 0; j < op.params.n_rx; ++j) {
        const cplx bj = b[static_cast<size_t>(j)];
        cplx* dst = out.data() + static_cast<size_t>(j) * mn;
        for (int r = 0; r < mn; ++r) dst[r] = bj * u.data()[static_cast<size_t>(r)];
    }
    return out;
}

} // namespace isac
