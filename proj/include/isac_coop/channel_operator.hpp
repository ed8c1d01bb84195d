#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "isac_coop/frames.hpp"
#include "isac_coop/params.hpp"
#include "isac_coop/pulse.hpp"
#include "isac_coop/transforms.hpp"

namespace isac {

/// Default subcarrier-offset truncation radius of the fast operator.
inline constexpr int kDefaultSupportHalfwidth = 5;

/// ULA response for half-wavelength spacing; element q carries phase
/// pi * (q - (n-1)/2) * sin(phi). Squared norm is n for any angle.
std::vector<cplx> array_response(double phi, int n_elems);

/// Echo operator for one (f_D, tau, phi) hypothesis.
///
/// Psi maps a delay-Doppler frame through the time-frequency channel mixing
/// (Doppler phase on the input slot, delay phase on the output subcarrier,
/// cross-ambiguity leakage across subcarriers, slot spill n - n' in {0, 1})
/// and back. G = b(phi) (x) Psi adds the receive array dimension. The channel
/// gain h and b(phi) are excluded from Psi itself.
struct ChannelOperator {
    OtfsParams params;
    double f_d;   // Doppler shift [Hz]
    double tau;   // round-trip delay [s], must lie in [0, T)
    double phi;   // AoA = AoD [rad]
    int support_halfwidth; // subcarrier-offset truncation radius; M means exact

    ChannelOperator(const OtfsParams& p, double f_d_, double tau_, double phi_,
                    int support_halfwidth_ = kDefaultSupportHalfwidth);
};

/// Subcarrier-leakage taps taps[d][delta + K] = A(d*T - tau, delta*delta_f - f_D)
/// for slot spill d in {0, 1} and |delta| <= K.
struct MixKernel {
    int halfwidth = 0;
    std::array<std::vector<cplx>, 2> taps;
};

namespace detail {

// e^{-j 2 pi r / m}, r = 0..m-1
std::vector<cplx> unit_roots_neg(int m);
// e^{+j 2 pi f_d i T/M}, i = 0..M-1
std::vector<cplx> doppler_samples(const OtfsParams& params, double f_d);
// e^{+j 2 pi f_d n T}, n = 0..N-1
std::vector<cplx> slot_phases(const OtfsParams& params, double f_d);
// e^{-j 2 pi m delta_f tau}, m = 0..M-1
std::vector<cplx> delay_phases(const OtfsParams& params, double tau);

// Rectangular-pulse ambiguity taps from precomputed tables; evaluates the
// same M-sample discrete sum as cross_ambiguity.
void ambiguity_taps(const OtfsParams& params, double tau, int halfwidth,
                    const cplx* doppler_samp, const cplx* roots_neg, MixKernel& out);

// TF-domain mixing: out[n,m] = delay_ph[m] * sum_{d, |delta|<=K}
//   taps[d][delta] * slot_ph[n-d] * x_tf[n-d, m-delta]. out is overwritten.
void mix_into(const OtfsParams& params, const MixKernel& kernel, const cplx* slot_ph,
              const cplx* delay_ph, const cplx* x_tf, cplx* out);

} // namespace detail

MixKernel build_mix_kernel(const OtfsParams& params, double f_d, double tau, int halfwidth);

/// One time-frequency pass of the channel:
///   Y[n,m] = e^{-j2pi m df tau} * sum_{d in {0,1}, n-d >= 0} sum_{|delta|<=K}
///            taps[d][delta] * X[n-d, m-delta] * e^{j2pi (n-d) T f_D}
TimeFrequencyFrame tf_channel_apply(const ChannelOperator& op, const TimeFrequencyFrame& X);

/// Psi x computed as sfft_to_dd(tf_channel_apply(isfft_to_tf(x))).
/// Cost O(MN * K) per call after the transform pair. With
/// support_halfwidth = M the result is the untruncated operator.
DelayDopplerFrame apply_channel_fast(const ChannelOperator& op, const DelayDopplerFrame& x);

/// Dense MN x MN realization of Psi, column by column, for small instances.
/// Throws ConfigError when M*N exceeds the cap.
Eigen::MatrixXcd build_psi_dense(const ChannelOperator& op, int cap = 4096);

/// G x = b(phi) (x) (Psi x), returned as N_R stacked blocks of length MN.
/// ||Gx||^2 = N_R * ||Psi x||^2 by construction; G is never materialized.
std::vector<cplx> apply_G(const ChannelOperator& op, const DelayDopplerFrame& x);

} // namespace isac
