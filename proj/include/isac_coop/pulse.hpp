#pragma once

#include <vector>

#include "isac_coop/params.hpp"

namespace isac {

/// Transmit/receive pulse sampled at t = i*T/M, i = 0..M-1.
///
/// Rectangular pulses carry amplitude 1/sqrt(T) on [0, T) so that the
/// discrete energy (T/M) * sum |g|^2 equals one and A(0,0) = 1.
class Pulse {
public:
    enum class Kind { rectangular };

    static Pulse rectangular(double duration, int sample_count);

    Kind kind() const { return kind_; }
    double duration() const { return duration_; }
    int sample_count() const { return static_cast<int>(samples_.size()); }
    const std::vector<cplx>& samples() const { return samples_; }

    /// Pulse value at arbitrary time; zero outside [0, duration).
    cplx value_at(double t) const;

    /// (T/M) * sum |g(iT/M)|^2
    double energy() const;

private:
    Pulse(Kind kind, double duration, std::vector<cplx> samples);
    Kind kind_;
    double duration_;
    std::vector<cplx> samples_;
};

/// Discrete cross-ambiguity between two pulses of common duration T and
/// sample count M:
///   A(tau, f_D) = (T/M) * sum_i g_rx(iT/M) * conj(g_tx(iT/M - tau)) * exp(-j2pi f_D iT/M)
/// Any real tau and f_D are accepted; out-of-support tau yields 0.
cplx cross_ambiguity(const Pulse& g_rx, const Pulse& g_tx, double tau, double f_d);

} // namespace isac
