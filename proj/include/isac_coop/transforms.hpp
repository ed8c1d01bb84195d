#pragma once

#include <memory>

#include "isac_coop/frames.hpp"

namespace isac {

/// FFT plan pair for one (M, N) grid size.
///
/// Maps between the delay-Doppler and time-frequency grids:
///   dd_to_tf:  X[n,m] = 1/sqrt(NM) * sum_{k,l} x[k,l] exp(-j2pi(mk/M - nl/N))
///   tf_to_dd:  exact inverse (the pair is unitary).
///
/// Plans are created once (FFTW planning is serialized internally); execution
/// is safe from multiple threads on distinct buffers.
class FftEngine {
public:
    FftEngine(int m, int n);
    ~FftEngine();
    FftEngine(const FftEngine&) = delete;
    FftEngine& operator=(const FftEngine&) = delete;

    int delay_bins() const { return m_; }
    int slots() const { return n_; }

    TimeFrequencyFrame dd_to_tf(const DelayDopplerFrame& x) const;
    DelayDopplerFrame tf_to_dd(const TimeFrequencyFrame& X) const;

    // Raw-buffer variants for preallocated scratch; in and out must not alias
    // and must hold M*N entries in the frame storage orders.
    void dd_to_tf_raw(const cplx* in, cplx* out, cplx* scratch) const;
    void tf_to_dd_raw(const cplx* in, cplx* out, cplx* scratch) const;

private:
    int m_, n_;
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

/// Shared engine cache keyed by (M, N).
std::shared_ptr<const FftEngine> fft_engine(int m, int n);

/// DD -> TF map with the 1/sqrt(NM) factor (energy preserving).
TimeFrequencyFrame isfft_to_tf(const DelayDopplerFrame& frame);

/// TF -> DD map, exact inverse of isfft_to_tf.
DelayDopplerFrame sfft_to_dd(const TimeFrequencyFrame& frame);

} // namespace isac
