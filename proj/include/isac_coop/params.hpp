#pragma once

#include <cmath>
#include <complex>

#include "isac_coop/errors.hpp"

namespace isac {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0; // m/s

/// OTFS waveform and front-end scalars shared by every module.
///
/// Construction enforces the slot/subcarrier orthogonality T*delta_f = 1 and
/// the narrowband assumption M*delta_f << f_c.
struct OtfsParams {
    int m_subcarriers;   // M
    int n_slots;         // N
    double delta_f;      // subcarrier spacing [Hz]
    double slot_time;    // T [s]
    double carrier_freq; // f_c [Hz]
    int n_tx;
    int n_rx;
    double total_power;  // sensing transmit power P_T [W]
    double noise_psd;    // N0 [W/Hz], 0 selects the noiseless limit

    OtfsParams(int m, int n, double df, double t, double fc, int ntx, int nrx,
               double pt, double n0)
        : m_subcarriers(m), n_slots(n), delta_f(df), slot_time(t),
          carrier_freq(fc), n_tx(ntx), n_rx(nrx), total_power(pt), noise_psd(n0) {
        if (m < 1 || n < 1 || ntx < 1 || nrx < 1)
            throw ConfigError("OtfsParams: all counts must be >= 1");
        if (!(df > 0.0) || !(t > 0.0) || !(fc > 0.0) || !(pt > 0.0))
            throw ConfigError("OtfsParams: delta_f, T, f_c, P_T must be > 0");
        if (!(n0 >= 0.0))
            throw ConfigError("OtfsParams: N0 must be >= 0");
        if (std::abs(t * df - 1.0) > 1e-12)
            throw ConfigError("OtfsParams: orthogonality T*delta_f = 1 violated");
        if (!(static_cast<double>(m) * df / fc < 0.01))
            throw ConfigError("OtfsParams: narrowband assumption M*delta_f << f_c violated");
    }

    int frame_size() const { return m_subcarriers * n_slots; }
    double bandwidth() const { return m_subcarriers * delta_f; }
    double avg_power() const { return total_power / m_subcarriers; }
    double noise_var() const { return noise_psd * delta_f; } // sigma_nu^2 per rx sample
    double doppler_resolution() const { return 1.0 / (n_slots * slot_time); }  // 1/(NT)
    double delay_resolution() const { return 1.0 / (m_subcarriers * delta_f); } // 1/(M*delta_f)
};

} // namespace isac
