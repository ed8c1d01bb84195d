#include "isac_coop/pulse.hpp"

#include <cmath>

#include "isac_coop/errors.hpp"

namespace isac {

Pulse::Pulse(Kind kind, double duration, std::vector<cplx> samples)
    : kind_(kind), duration_(duration), samples_(std::move(samples)) {}

Pulse Pulse::rectangular(double duration, int sample_count) {
    if (!(duration > 0.0) || sample_count < 1)
        throw ConfigError("Pulse: duration must be > 0 and sample count >= 1");
    const double amp = 1.0 / std::sqrt(duration);
    std::vector<cplx> s(static_cast<size_t>(sample_count), cplx(amp, 0.0));
    return Pulse(Kind::rectangular, duration, std::move(s));
}

cplx Pulse::value_at(double t) const {
    if (t < 0.0 || t >= duration_) return {0.0, 0.0};
    // rectangular is the only kind
    return {1.0 / std::sqrt(duration_), 0.0};
}

double Pulse::energy() const {
    double acc = 0.0;
    for (const cplx& v : samples_) acc += std::norm(v);
    return acc * duration_ / sample_count();
}

cplx cross_ambiguity(const Pulse& g_rx, const Pulse& g_tx, double tau, double f_d) {
    if (g_rx.sample_count() != g_tx.sample_count() ||
        g_rx.duration() != g_tx.duration())
        throw ConfigError("cross_ambiguity: pulses must share duration and sample count");
    const int m = g_rx.sample_count();
    const double t_total = g_rx.duration();
    const double dt = t_total / m;
    cplx acc(0.0, 0.0);
    for (int i = 0; i < m; ++i) {
        const double ti = i * dt;
        const cplx gv = g_tx.value_at(ti - tau);
        if (gv == cplx(0.0, 0.0)) continue;
        const double ph = -2.0 * M_PI * f_d * ti;
        acc += g_rx.samples()[i] * std::conj(gv) * cplx(std::cos(ph), std::sin(ph));
    }
    return acc * dt;
}

} // namespace isac
