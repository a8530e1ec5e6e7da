// AVX2+FMA kernel variants. Compiled only on x86-64, with -mavx2 -mfma
// -ffp-contract=off. Each loop body is a 4-lane transcription of the scalar
// reference in kernels_scalar.cpp: same operation sequence, same fma
// placement, accumulator lanes combined as (acc0 + acc2) + (acc1 + acc3),
// tails delegated to the shared scalar element functions. On finite and
// non-finite inputs alike the results are bit-identical to the scalar
// backend, which is what makes runtime dispatch invisible to callers.

#include <immintrin.h>

#include "kernels_impl.hpp"

namespace curvedress::kernels::detail {
namespace {

namespace cf = coeffs;

template <std::size_t N>
inline __m256d polevl_v(__m256d x, const std::array<double, N>& c) {
    __m256d r = _mm256_set1_pd(c[0]);
    for (std::size_t i = 1; i < N; ++i)
        r = _mm256_fmadd_pd(r, x, _mm256_set1_pd(c[i]));
    return r;
}

template <std::size_t N>
inline __m256d p1evl_v(__m256d x, const std::array<double, N>& c) {
    __m256d r = _mm256_add_pd(x, _mm256_set1_pd(c[0]));
    for (std::size_t i = 1; i < N; ++i)
        r = _mm256_fmadd_pd(r, x, _mm256_set1_pd(c[i]));
    return r;
}

inline __m256d vabs(__m256d x) {
    return _mm256_and_pd(
        x, _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFLL)));
}

inline __m256d vneg(__m256d x) {
    return _mm256_xor_pd(
        x, _mm256_castsi256_pd(_mm256_set1_epi64x(
               static_cast<long long>(cf::kSignBit))));
}

// (acc0 + acc2) + (acc1 + acc3), matching the scalar combine order.
inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

// exp for lane values in [-709, 0]; see the scalar exp_nonpos.
inline __m256d exp_nonpos_v(__m256d x) {
    const __m256d n = _mm256_round_pd(
        _mm256_mul_pd(x, _mm256_set1_pd(cf::kLog2E)),
        _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(cf::kExpC1), x);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(cf::kExpC2), r);
    const __m256d rr = _mm256_mul_pd(r, r);
    const __m256d p = _mm256_mul_pd(r, polevl_v(rr, cf::kExpP));
    const __m256d q = polevl_v(rr, cf::kExpQ);
    __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));
    // n is integral in [-1023, 0], so the narrowing int32 conversion is exact.
    const __m256i ni = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n));
    const __m256i scale_bits = _mm256_slli_epi64(
        _mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(e, _mm256_castsi256_pd(scale_bits));
}

inline __m256d norm_cdf_4(__m256d a) {
    const __m256d x = _mm256_mul_pd(a, _mm256_set1_pd(cf::kSqrtHalf));
    const __m256d z = vabs(x);

    // |x| < 1: 0.5 + 0.5 * erf(x)
    const __m256d w = _mm256_mul_pd(x, x);
    const __m256d erf = _mm256_div_pd(_mm256_mul_pd(x, polevl_v(w, cf::kErfT)),
                                      p1evl_v(w, cf::kErfU));
    const __m256d y_small =
        _mm256_fmadd_pd(_mm256_set1_pd(0.5), erf, _mm256_set1_pd(0.5));

    // |x| >= 1: 0.5 * erfc(z), flipped for positive x.
    const __m256d arg =
        _mm256_max_pd(vneg(_mm256_mul_pd(z, z)), _mm256_set1_pd(cf::kExpArgFloor));
    const __m256d e = exp_nonpos_v(arg);
    const __m256d lt8 = _mm256_cmp_pd(z, _mm256_set1_pd(8.0), _CMP_LT_OQ);
    const __m256d pp = _mm256_blendv_pd(polevl_v(z, cf::kErfcR),
                                        polevl_v(z, cf::kErfcP), lt8);
    const __m256d qq = _mm256_blendv_pd(p1evl_v(z, cf::kErfcS),
                                        p1evl_v(z, cf::kErfcQ), lt8);
    __m256d erfc = _mm256_div_pd(_mm256_mul_pd(e, pp), qq);
    const __m256d cut = _mm256_cmp_pd(z, _mm256_set1_pd(cf::kErfcCut), _CMP_GT_OQ);
    erfc = _mm256_andnot_pd(cut, erfc);
    __m256d y_big = _mm256_mul_pd(_mm256_set1_pd(0.5), erfc);
    const __m256d xpos = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_GT_OQ);
    y_big = _mm256_blendv_pd(y_big, _mm256_sub_pd(_mm256_set1_pd(1.0), y_big),
                             xpos);

    const __m256d small = _mm256_cmp_pd(z, _mm256_set1_pd(1.0), _CMP_LT_OQ);
    __m256d y = _mm256_blendv_pd(y_big, y_small, small);
    // NaN passes through with its payload, as in the scalar early return.
    const __m256d unord = _mm256_cmp_pd(a, a, _CMP_UNORD_Q);
    return _mm256_blendv_pd(y, a, unord);
}

void norm_cdf_k(const double* z, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, norm_cdf_4(_mm256_loadu_pd(z + i)));
    for (; i < n; ++i) out[i] = norm_cdf_one(z[i]);
}

double sum_k(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double total = hsum(acc);
    for (; i < n; ++i) total += x[i];
    return total;
}

double sum_sq_dev_k(const double* x, std::size_t n, double c) {
    const __m256d vc = _mm256_set1_pd(c);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vc);
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double total = hsum(acc);
    for (; i < n; ++i) {
        const double d = x[i] - c;
        total = std::fma(d, d, total);
    }
    return total;
}

double abs_dev_sum_k(const double* x, std::size_t n, double c) {
    const __m256d vc = _mm256_set1_pd(c);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = vabs(_mm256_sub_pd(_mm256_loadu_pd(x + i), vc));
        acc = _mm256_add_pd(acc, d);
    }
    double total = hsum(acc);
    for (; i < n; ++i) total += std::fabs(x[i] - c);
    return total;
}

double weighted_abs_dev_sum_k(const double* x, const double* w, std::size_t n,
                              double c) {
    const __m256d vc = _mm256_set1_pd(c);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = vabs(_mm256_sub_pd(_mm256_loadu_pd(x + i), vc));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), d, acc);
    }
    double total = hsum(acc);
    for (; i < n; ++i) total = std::fma(w[i], std::fabs(x[i] - c), total);
    return total;
}

// 64-bit lane product mod 2^64 out of 32-bit partial products.
inline __m256i mul64(__m256i a, __m256i b) {
    const __m256i alo_bhi = _mm256_mul_epu32(a, _mm256_srli_epi64(b, 32));
    const __m256i ahi_blo = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), b);
    const __m256i cross =
        _mm256_slli_epi64(_mm256_add_epi64(alo_bhi, ahi_blo), 32);
    return _mm256_add_epi64(_mm256_mul_epu32(a, b), cross);
}

inline __m256i mix64_v(__m256i z) {
    z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 30));
    z = mul64(z, _mm256_set1_epi64x(static_cast<long long>(0xBF58476D1CE4E5B9ULL)));
    z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 27));
    z = mul64(z, _mm256_set1_epi64x(static_cast<long long>(0x94D049BB133111EBULL)));
    z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 31));
    return z;
}

void perm_sign_means_k(const double* diffs, std::size_t n, std::uint64_t seed,
                       double* out, std::size_t n_resamples) {
    const __m256i lane = _mm256_setr_epi64x(0, 1, 2, 3);
    const __m256i vseed = _mm256_set1_epi64x(static_cast<long long>(seed));
    const __m256i vgold =
        _mm256_set1_epi64x(static_cast<long long>(cf::kGolden));
    const __m256i sgn_mask =
        _mm256_set1_epi64x(static_cast<long long>(cf::kSignBit));
    for (std::size_t r = 0; r < n_resamples; ++r) {
        const std::uint64_t base = static_cast<std::uint64_t>(r) * n;
        __m256d acc = _mm256_setzero_pd();
        std::size_t i = 0;
        for (; i + 4 <= n; i += 4) {
            const __m256i idx = _mm256_add_epi64(
                _mm256_set1_epi64x(static_cast<long long>(base + i + 1)), lane);
            const __m256i h = mix64_v(_mm256_xor_si256(vseed, mul64(vgold, idx)));
            const __m256i v = _mm256_xor_si256(
                _mm256_loadu_si256(reinterpret_cast<const __m256i*>(diffs + i)),
                _mm256_and_si256(h, sgn_mask));
            acc = _mm256_add_pd(acc, _mm256_castsi256_pd(v));
        }
        double total = hsum(acc);
        for (; i < n; ++i) total += sign_flipped(diffs[i], seed, base + i + 1);
        out[r] = total / static_cast<double>(n);
    }
}

}  // namespace

const Table& avx2_table() {
    static const Table t{norm_cdf_k,    sum_k,
                         sum_sq_dev_k,  abs_dev_sum_k,
                         weighted_abs_dev_sum_k, perm_sign_means_k};
    return t;
}

}  // namespace curvedress::kernels::detail
