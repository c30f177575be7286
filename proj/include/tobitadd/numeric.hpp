#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace tobitadd {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
inline constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;

namespace detail {

inline void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

}  // namespace detail

/// log of the standard normal density: -z^2/2 - log sqrt(2*pi).
inline double log_phi(double z) {
    detail::require_finite(z, "log_phi");
    return -0.5 * z * z - kLogSqrt2Pi;
}

/// Standard normal CDF via the complementary error function.
inline double norm_cdf(double z) {
    detail::require_finite(z, "norm_cdf");
    return 0.5 * std::erfc(-z * kInvSqrt2);
}

/// log(1 - Phi(z)) = log Phi(-z), accurate over the whole clamped range.
///
/// Three regimes: for z <= -5 the upper tail is ~1 and log1p of the tiny
/// lower-tail mass is exact; for |z| < 5 erfc carries the tail directly with
/// no cancellation; for z >= 5 the Mills-ratio continued fraction
/// m(z) = 1/(z + 1/(z + 2/(z + 3/...))) gives log Phi(-z) = log_phi(z) + log m(z).
/// Inputs beyond |z| = 40 are clamped; past that point the value no longer
/// moves the likelihood at double precision.
inline double log_one_minus_Phi(double z) {
    detail::require_finite(z, "log_one_minus_Phi");
    if (z > 40.0) z = 40.0;
    if (z < -40.0) z = -40.0;
    if (z <= -5.0) {
        return std::log1p(-0.5 * std::erfc(-z * kInvSqrt2));
    }
    if (z < 5.0) {
        return std::log(0.5 * std::erfc(z * kInvSqrt2));
    }
    double cf = 0.0;
    for (int k = 50; k >= 1; --k) cf = static_cast<double>(k) / (z + cf);
    const double mills = 1.0 / (z + cf);
    return log_phi(z) + std::log(mills);
}

/// Inverse Mills ratio lambda(z) = phi(z) / (1 - Phi(z)), always in log space.
inline double mills_lambda(double z) {
    return std::exp(log_phi(z > 40.0 ? 40.0 : (z < -40.0 ? -40.0 : z)) - log_one_minus_Phi(z));
}

namespace detail {

// Ratio of two degree-7 polynomials, coefficients in ascending order.
inline double rational_7_7(const double (&num)[8], const double (&den)[8], double r) {
    double u = num[7];
    double v = den[7];
    for (int i = 6; i >= 0; --i) {
        u = u * r + num[i];
        v = v * r + den[i];
    }
    return u / v;
}

}  // namespace detail

/// Inverse standard normal CDF (Wichura's AS 241 rational approximations).
inline double inverse_Phi(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inverse_Phi: p must lie in (0, 1)");

    static constexpr double a[8] = {3.3871328727963666080e+0, 1.3314166789178437745e+2,
                                    1.9715909503065514427e+3, 1.3731693765509461125e+4,
                                    4.5921953931549871457e+4, 6.7265770927008700853e+4,
                                    3.3430575583588128105e+4, 2.5090809287301226727e+3};
    static constexpr double b[8] = {1.0,                      4.2313330701600911252e+1,
                                    6.8718700749205790830e+2, 5.3941960214247511077e+3,
                                    2.1213794301586595867e+4, 3.9307895800092710610e+4,
                                    2.8729085735721942674e+4, 5.2264952788528545610e+3};
    static constexpr double c[8] = {1.42343711074968357734e+0, 4.63033784615654529590e+0,
                                    5.76949722146069140550e+0, 3.64784832476320460504e+0,
                                    1.27045825245236838258e+0, 2.41780725177450611770e-1,
                                    2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static constexpr double d[8] = {1.0,                       2.05319162663775882187e+0,
                                    1.67638483018380384940e+0, 6.89767334985100004550e-1,
                                    1.48103976427480074590e-1, 1.51986665636164571966e-2,
                                    5.47593808499534494600e-4, 1.05075007164441684324e-9};
    static constexpr double e[8] = {6.65790464350110377720e+0, 5.46378491116411436990e+0,
                                    1.78482653991729133580e+0, 2.96560571828504891230e-1,
                                    2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                    2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static constexpr double f[8] = {1.0,                       5.99832206555887937690e-1,
                                    1.36929880922735805310e-1, 1.48753612908506148525e-2,
                                    7.86869131145613259100e-4, 1.84631831751005468180e-6,
                                    1.42151175831644588870e-15, 0.0};

    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * detail::rational_7_7(a, b, r);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        val = detail::rational_7_7(c, d, r - 1.6);
    } else {
        val = detail::rational_7_7(e, f, r - 5.0);
    }
    return (q < 0.0) ? -val : val;
}

/// Counter-based random stream: ten rounds of a Philox-style 2x64 bijection
/// over (draw index, stream id) keyed by the seed. Draw k of stream s is a
/// pure function of (seed, s, k), so identical (seed, stream_id) replay
/// identical sequences on every platform and distinct stream ids can never
/// collide, regardless of how many draws each stream consumes.
class RngStream {
   public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_(stream_id) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    std::uint64_t next_u64() {
        std::uint64_t x0 = counter_++;
        std::uint64_t x1 = stream_;
        std::uint64_t key = seed_;
        for (int round = 0; round < 10; ++round) {
            const unsigned __int128 prod = static_cast<unsigned __int128>(kMultiplier) * x0;
            const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
            const std::uint64_t lo = static_cast<std::uint64_t>(prod);
            x0 = hi ^ key ^ x1;
            x1 = lo;
            key += kWeyl;
        }
        return x0;
    }

    /// Uniform draw strictly inside (0, 1), 53 significant bits.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via the inverse-CDF transform: exactly one uniform
    /// per normal, so draw counts stay deterministic.
    double next_normal() { return inverse_Phi(next_uniform()); }

   private:
    static constexpr std::uint64_t kMultiplier = 0xD2B74407B1CE6E93ULL;
    static constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace tobitadd
