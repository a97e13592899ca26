#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "epismc/errors.hpp"

namespace epismc {

// Deterministic counter-derived RNG. Streams are derived from a master seed
// plus an arbitrary list of context integers (day index, particle index, ...)
// so that draws are reproducible independent of thread scheduling or of how
// many draws other streams consumed. Core generator is xoshiro256**; stream
// derivation uses splitmix64 over the mixed context words.
//
// All samplers below are stateless transformations of the stream (no cached
// spare normal etc.) so a stream's k-th draw is a pure function of (seed,
// context, k). std::<random> distributions are deliberately not used: their
// algorithms are implementation-defined, which would tie test expectations
// and checkpointed runs to a particular standard library.

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

class RngStream {
  public:
    // Derive a stream from master seed and up to four context words.
    explicit RngStream(std::uint64_t seed, std::uint64_t c0 = 0, std::uint64_t c1 = 0,
                       std::uint64_t c2 = 0, std::uint64_t c3 = 0) {
        std::uint64_t x = seed;
        // fold the context in one word at a time; constants keep (0,1) and (1,0) apart
        x ^= 0xd1b54a32d192ed03ULL * (c0 + 1);
        (void)detail::splitmix64(x);
        x ^= 0x8cb92ba72f3d8dd7ULL * (c1 + 1);
        (void)detail::splitmix64(x);
        x ^= 0xaef17502108ef2d9ULL * (c2 + 1);
        (void)detail::splitmix64(x);
        x ^= 0x9e6c63d0876a9a47ULL * (c3 + 1);
        for (auto& s : s_) s = detail::splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on (0,1): never returns 0 or 1, safe for log/logit
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // standard normal via Box-Muller, always consuming two uniforms
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Gamma(shape, scale) by Marsaglia-Tsang; shape < 1 boosted via the
    // standard U^(1/shape) trick.
    double gamma(double shape, double scale) {
        if (!(shape > 0.0) || !(scale > 0.0))
            throw invalid_parameter_error("gamma draw requires shape > 0 and scale > 0");
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

    // Poisson: inversion by sequential search for small means, PTRS
    // transformed rejection (Hoermann 1993) otherwise. Exact in both regimes.
    long poisson(double mean) {
        if (!(mean >= 0.0)) throw invalid_parameter_error("poisson draw requires mean >= 0");
        if (mean == 0.0) return 0;
        if (mean < 30.0) {
            const double L = std::exp(-mean);
            long k = 0;
            double p = uniform();
            while (p > L) {
                p *= uniform();
                ++k;
            }
            return k;
        }
        // PTRS
        const double b = 0.931 + 2.53 * std::sqrt(mean);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            double u = uniform() - 0.5;
            double v = uniform();
            double us = 0.5 - std::fabs(u);
            double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<long>(k);
            if (k < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                k * std::log(mean) - mean - std::lgamma(k + 1.0))
                return static_cast<long>(k);
        }
    }

    // Binomial by inversion (n here is at most a survey denominator, so O(n)
    // worst case is acceptable); symmetry trick keeps p <= 1/2.
    long binomial(long n, double p) {
        if (n < 0 || p < 0.0 || p > 1.0)
            throw invalid_parameter_error("binomial draw requires n >= 0 and p in [0,1]");
        if (n == 0 || p == 0.0) return 0;
        if (p == 1.0) return n;
        if (p > 0.5) return n - binomial(n, 1.0 - p);
        const double q = 1.0 - p;
        const double s = p / q;
        double f = std::pow(q, static_cast<double>(n));
        double u = uniform();
        long k = 0;
        double cdf = f;
        while (u > cdf && k < n) {
            ++k;
            f *= s * (static_cast<double>(n - k + 1) / static_cast<double>(k));
            cdf += f;
        }
        return k;
    }

    // Negative binomial in the mean/dispersion parameterization used by the
    // observation model: E = mean, Var = mean*(eta+1). Gamma-Poisson mixture.
    long negbin_mean_dispersion(double mean, double eta) {
        if (!(mean >= 0.0) || !(eta > 0.0))
            throw invalid_parameter_error("negbin draw requires mean >= 0 and eta > 0");
        if (mean == 0.0) return 0;
        const double r = mean / eta;
        return poisson(gamma(r, eta));
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

}  // namespace epismc
