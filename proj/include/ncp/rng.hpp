#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace ncp {

/// splitmix64 step, used to derive independent stream seeds from one root
/// seed. Distinct stream ids give decorrelated engines for any root value.
inline std::uint64_t splitmix64(std::uint64_t &state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic engine for a (seed, stream) pair. All randomness in the
/// library flows through this so runs are reproducible across platforms.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0xd1b54a32d192ed03ULL * (stream + 1));
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s) >> 32),
                      static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s) >> 32)};
    return std::mt19937_64(seq);
}

/// Uniform draw in the open interval (0, 1). Uses the top 53 bits plus a
/// half-ulp offset so 0 and 1 are unreachable and the mapping is exact.
inline double uniform_open(std::mt19937_64 &eng) {
    const std::uint64_t x = eng();
    return (static_cast<double>(x >> 11) + 0.5) * 0x1p-53;
}

/// Inverse standard normal CDF, Acklam's rational approximation polished by
/// one Halley step against erfc. Deterministic and accurate to ~1e-15,
/// unlike distribution adapters whose stream layout varies by libstdc++.
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0) || !(p < 1.0))
        throw std::invalid_argument("inverse_normal_cdf: p must lie in (0,1)");

    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    static constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double u = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
            ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double u = p - 0.5;
        const double r = u * u;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double u = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
            ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    }

    // Halley refinement: e = Phi(x) - p via erfc, which stays accurate in
    // both tails; one step squares the approximation error.
    static const double sqrt_half = std::sqrt(0.5);
    static const double inv_sqrt_2pi = 1.0 / std::sqrt(8.0 * std::atan(1.0));
    const double e = 0.5 * std::erfc(-x * sqrt_half) - p;
    const double u = e / (inv_sqrt_2pi * std::exp(-0.5 * x * x));
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

/// Standard normal draw through the inverse CDF, one engine call per draw.
inline double normal_draw(std::mt19937_64 &eng) {
    return inverse_normal_cdf(uniform_open(eng));
}

} // namespace ncp
