#pragma once

// Internal glue between the kernel translation units. The inline functions
// here are the scalar reference arithmetic; the AVX2 TU reuses them for loop
// tails, so both TUs must see the exact same operation sequence. Every
// fused multiply-add is written out explicitly (the TUs are compiled with
// -ffp-contract=off) so the scalar and vector instruction streams round
// identically.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "curvedress/kernels.hpp"
#include "curvedress/rng.hpp"
#include "kernels_coeffs.hpp"

namespace curvedress::kernels::detail {

const Table& scalar_table();
#ifdef CURVEDRESS_HAVE_AVX2_TU
const Table& avx2_table();
#endif

template <std::size_t N>
inline double polevl(double x, const std::array<double, N>& c) {
    double r = c[0];
    for (std::size_t i = 1; i < N; ++i) r = std::fma(r, x, c[i]);
    return r;
}

// Same, with an implicit leading coefficient of 1.
template <std::size_t N>
inline double p1evl(double x, const std::array<double, N>& c) {
    double r = x + c[0];
    for (std::size_t i = 1; i < N; ++i) r = std::fma(r, x, c[i]);
    return r;
}

// exp for arguments in [-709, 0]; callers clamp. Cody-Waite reduction with
// round-to-nearest-even (matching _mm256_round_pd) and 2^n scaling built
// directly in the exponent field.
inline double exp_nonpos(double x) {
    namespace cf = coeffs;
    const double n = std::nearbyint(x * cf::kLog2E);
    double r = std::fma(-n, cf::kExpC1, x);
    r = std::fma(-n, cf::kExpC2, r);
    const double rr = r * r;
    const double p = r * polevl(rr, cf::kExpP);
    const double q = polevl(rr, cf::kExpQ);
    double e = p / (q - p);
    e = std::fma(2.0, e, 1.0);
    const auto ni = static_cast<std::int64_t>(n);
    const double scale =
        std::bit_cast<double>(static_cast<std::uint64_t>(ni + 1023) << 52);
    return e * scale;
}

// Standard normal CDF, one element. Reference for both backends.
inline double norm_cdf_one(double a) {
    namespace cf = coeffs;
    if (a != a) return a;
    const double x = a * cf::kSqrtHalf;
    const double z = std::fabs(x);
    if (z < 1.0) {
        const double w = x * x;
        const double erf = (x * polevl(w, cf::kErfT)) / p1evl(w, cf::kErfU);
        return std::fma(0.5, erf, 0.5);
    }
    double erfc;
    if (z > cf::kErfcCut) {
        erfc = 0.0;
    } else {
        const double arg = std::fmax(-(z * z), cf::kExpArgFloor);
        const double e = exp_nonpos(arg);
        double p, q;
        if (z < 8.0) {
            p = polevl(z, cf::kErfcP);
            q = p1evl(z, cf::kErfcQ);
        } else {
            p = polevl(z, cf::kErfcR);
            q = p1evl(z, cf::kErfcS);
        }
        erfc = (e * p) / q;
    }
    double y = 0.5 * erfc;
    if (x > 0.0) y = 1.0 - y;
    return y;
}

// diffs[i] with its sign flipped iff the top bit of the decision hash is set.
// idx is 1-based within the whole resampling stream: r * n + i + 1.
inline double sign_flipped(double v, std::uint64_t seed, std::uint64_t idx) {
    namespace cf = coeffs;
    const std::uint64_t h = mix64(seed ^ (cf::kGolden * idx));
    return std::bit_cast<double>(std::bit_cast<std::uint64_t>(v) ^
                                 (h & cf::kSignBit));
}

}  // namespace curvedress::kernels::detail
