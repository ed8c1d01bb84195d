#pragma once

#include <complex>
#include <vector>

#include "isac_coop/errors.hpp"
#include "isac_coop/params.hpp"

namespace isac {

/// M x N grid of delay-Doppler symbols x[k,l], k = delay bin, l = Doppler bin.
/// Storage is delay-major: flat index k + M*l.
class DelayDopplerFrame {
public:
    DelayDopplerFrame(int m, int n) : m_(m), n_(n), data_(static_cast<size_t>(m) * n) {
        if (m < 1 || n < 1) throw ConfigError("DelayDopplerFrame: dimensions must be >= 1");
    }

    int delay_bins() const { return m_; }
    int doppler_bins() const { return n_; }
    int size() const { return m_ * n_; }

    cplx& operator()(int k, int l) { return data_[static_cast<size_t>(k) + static_cast<size_t>(m_) * l]; }
    const cplx& operator()(int k, int l) const { return data_[static_cast<size_t>(k) + static_cast<size_t>(m_) * l]; }

    std::vector<cplx>& data() { return data_; }
    const std::vector<cplx>& data() const { return data_; }

    double energy() const {
        double e = 0.0;
        for (const cplx& v : data_) e += std::norm(v);
        return e;
    }
    // Mean per-symbol energy; payload frames are expected to satisfy
    // |mean_energy - 1| <= 0.05.
    double mean_energy() const { return energy() / size(); }

private:
    int m_, n_;
    std::vector<cplx> data_;
};

/// N x M grid of time-frequency symbols X[n,m], n = time slot, m = subcarrier.
/// Storage is subcarrier-major: flat index m + M*n.
class TimeFrequencyFrame {
public:
    TimeFrequencyFrame(int n, int m) : n_(n), m_(m), data_(static_cast<size_t>(m) * n) {
        if (m < 1 || n < 1) throw ConfigError("TimeFrequencyFrame: dimensions must be >= 1");
    }

    int slots() const { return n_; }
    int subcarriers() const { return m_; }
    int size() const { return m_ * n_; }

    cplx& operator()(int n, int m) { return data_[static_cast<size_t>(m) + static_cast<size_t>(m_) * n]; }
    const cplx& operator()(int n, int m) const { return data_[static_cast<size_t>(m) + static_cast<size_t>(m_) * n]; }

    std::vector<cplx>& data() { return data_; }
    const std::vector<cplx>& data() const { return data_; }

    double energy() const {
        double e = 0.0;
        for (const cplx& v : data_) e += std::norm(v);
        return e;
    }

private:
    int n_, m_;
    std::vector<cplx> data_;
};

} // namespace isac
