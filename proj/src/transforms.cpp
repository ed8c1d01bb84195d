#include "isac_coop/transforms.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace isac {

namespace {
std::mutex g_plan_mutex; // FFTW planning is not thread-safe
}

struct FftEngine::Plans {
    // Stage plans for the two composite transforms. All plans are created
    // with FFTW_UNALIGNED so they can execute on arbitrary caller buffers.
    fftw_plan fwd_m = nullptr;  // M-point forward along contiguous axis, N batches
    fftw_plan bwd_n = nullptr;  // N-point backward along strided axis, M batches
    fftw_plan fwd_n = nullptr;  // N-point forward along strided axis, M batches
    fftw_plan bwd_m = nullptr;  // M-point backward along contiguous axis, N batches
};

FftEngine::FftEngine(int m, int n) : m_(m), n_(n), plans_(std::make_unique<Plans>()) {
    if (m < 1 || n < 1) throw ConfigError("FftEngine: dimensions must be >= 1");
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    std::vector<cplx> a(static_cast<size_t>(m) * n), b(a.size());
    auto* pa = reinterpret_cast<fftw_complex*>(a.data());
    auto* pb = reinterpret_cast<fftw_complex*>(b.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    int nm[1] = {m};
    int nn[1] = {n};
    plans_->fwd_m = fftw_plan_many_dft(1, nm, n, pa, nullptr, 1, m, pb, nullptr, 1, m,
                                       FFTW_FORWARD, flags);
    plans_->bwd_m = fftw_plan_many_dft(1, nm, n, pa, nullptr, 1, m, pb, nullptr, 1, m,
                                       FFTW_BACKWARD, flags);
    plans_->fwd_n = fftw_plan_many_dft(1, nn, m, pa, nullptr, m, 1, pb, nullptr, m, 1,
                                       FFTW_FORWARD, flags);
    plans_->bwd_n = fftw_plan_many_dft(1, nn, m, pa, nullptr, m, 1, pb, nullptr, m, 1,
                                       FFTW_BACKWARD, flags);
    if (!plans_->fwd_m || !plans_->bwd_m || !plans_->fwd_n || !plans_->bwd_n)
        throw ConfigError("FftEngine: FFTW plan creation failed");
}

FftEngine::~FftEngine() {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    fftw_destroy_plan(plans_->fwd_m);
    fftw_destroy_plan(plans_->bwd_m);
    fftw_destroy_plan(plans_->fwd_n);
    fftw_destroy_plan(plans_->bwd_n);
}

void FftEngine::dd_to_tf_raw(const cplx* in, cplx* out, cplx* scratch) const {
    // in: x[k + M*l]; scratch: tmp[m + M*l]; out: X[m + M*n]
    auto* pin = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in));
    auto* ps = reinterpret_cast<fftw_complex*>(scratch);
    auto* pout = reinterpret_cast<fftw_complex*>(out);
    fftw_execute_dft(plans_->fwd_m, pin, ps);
    fftw_execute_dft(plans_->bwd_n, ps, pout);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m_) * n_);
    const size_t total = static_cast<size_t>(m_) * n_;
    for (size_t i = 0; i < total; ++i) out[i] *= scale;
}

void FftEngine::tf_to_dd_raw(const cplx* in, cplx* out, cplx* scratch) const {
    // in: X[m + M*n]; scratch: tmp[m + M*l]; out: x[k + M*l]
    auto* pin = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in));
    auto* ps = reinterpret_cast<fftw_complex*>(scratch);
    auto* pout = reinterpret_cast<fftw_complex*>(out);
    fftw_execute_dft(plans_->fwd_n, pin, ps);
    fftw_execute_dft(plans_->bwd_m, ps, pout);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m_) * n_);
    const size_t total = static_cast<size_t>(m_) * n_;
    for (size_t i = 0; i < total; ++i) out[i] *= scale;
}

TimeFrequencyFrame FftEngine::dd_to_tf(const DelayDopplerFrame& x) const {
    if (x.delay_bins() != m_ || x.doppler_bins() != n_)
        throw ConfigError("dd_to_tf: frame dimensions do not match engine");
    TimeFrequencyFrame out(n_, m_);
    std::vector<cplx> scratch(x.data().size());
    dd_to_tf_raw(x.data().data(), out.data().data(), scratch.data());
    return out;
}

DelayDopplerFrame FftEngine::tf_to_dd(const TimeFrequencyFrame& X) const {
    if (X.subcarriers() != m_ || X.slots() != n_)
        throw ConfigError("tf_to_dd: frame dimensions do not match engine");
    DelayDopplerFrame out(m_, n_);
    std::vector<cplx> scratch(X.data().size());
    tf_to_dd_raw(X.data().data(), out.data().data(), scratch.data());
    return out;
}

std::shared_ptr<const FftEngine> fft_engine(int m, int n) {
    static std::mutex cache_mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const FftEngine>> cache;
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto key = std::make_pair(m, n);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto eng = std::make_shared<const FftEngine>(m, n);
    cache.emplace(key, eng);
    return eng;
}

TimeFrequencyFrame isfft_to_tf(const DelayDopplerFrame& frame) {
    return fft_engine(frame.delay_bins(), frame.doppler_bins())->dd_to_tf(frame);
}

DelayDopplerFrame sfft_to_dd(const TimeFrequencyFrame& frame) {
    return fft_engine(frame.subcarriers(), frame.slots())->tf_to_dd(frame);
}

} // namespace isac
