#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

#include "isac_coop/params.hpp"

namespace isac {

namespace detail {
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
} // namespace detail

/// Mixes an ordered tuple of fields (seed, waypoint, subset, trial, bs,
/// stream tag, ...) into one 64-bit stream seed. Order-sensitive.
inline uint64_t derive_seed(std::initializer_list<uint64_t> fields) {
    uint64_t state = 0x6a09e667f3bcc909ULL;
    for (uint64_t f : fields) {
        state ^= f + 0x9e3779b97f4a7c15ULL + (state << 6) + (state >> 2);
        (void)detail::splitmix64(state);
        state = detail::splitmix64(state);
    }
    return state;
}

// Stream tags used when deriving per-purpose seeds from one tuple.
enum : uint64_t {
    kStreamSymbols = 0x53594d42ULL, // payload data symbols
    kStreamChannel = 0x4348414eULL, // alpha phase + receiver noise
    kStreamBound = 0x424f554eULL,   // canonical frame for bound evaluation
};

/// xoshiro256++ with an explicit Box-Muller normal source. Self-contained so
/// that draws are bit-reproducible regardless of the standard library.
class RandomStream {
public:
    explicit RandomStream(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = detail::splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (pairs cached).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - next_uniform(); // (0, 1], keeps log finite
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Circularly symmetric complex Gaussian with E{|z|^2} = var.
    cplx next_cnormal(double var) {
        const double s = std::sqrt(var / 2.0);
        const double re = s * next_normal();
        const double im = s * next_normal();
        return {re, im};
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace isac
