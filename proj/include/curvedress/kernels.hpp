#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace curvedress::kernels {

/// Numeric inner loops used across the library: batch standard-normal CDF
/// (curve pushforward construction), reduction primitives (moment fits and
/// scoring), and the sign-flip resampler behind the paired permutation test.
///
/// Each kernel exists as a scalar reference implementation and, on x86-64,
/// an AVX2+FMA variant. The scalar code fixes the arithmetic contract:
/// identical polynomial evaluation, explicit fma placement, and a four-lane
/// accumulation order for reductions. Variants are bit-identical on finite
/// inputs, so runtime dispatch never changes results.

enum class Backend { scalar, avx2 };

Backend active_backend();
const char* backend_name(Backend b);
bool backend_supported(Backend b);

/// Overrides dispatch (test hook; also reachable via CURVEDRESS_KERNELS=scalar).
/// Throws if the backend is not supported on this CPU. Not thread safe.
void force_backend(Backend b);

/// Standard normal CDF, elementwise. |err| < 1e-13 absolute over the real line.
void norm_cdf(std::span<const double> z, std::span<double> out);
double norm_cdf(double z);

/// Sum with the fixed four-lane accumulation order.
double sum(std::span<const double> x);
/// Sum of squared deviations from center.
double sum_sq_dev(std::span<const double> x, double center);
/// Sum of |x_i - center|.
double abs_dev_sum(std::span<const double> x, double center);
/// Sum of w_i * |x_i - center|.
double weighted_abs_dev_sum(std::span<const double> x, std::span<const double> w,
                            double center);

/// For each resample r, the mean of diffs with each element's sign flipped
/// independently with probability 1/2. The flip decision for (r, i) is a
/// stateless hash of (seed, r * n + i), so the stream does not depend on
/// evaluation order or backend.
void perm_sign_means(std::span<const double> diffs, std::uint64_t seed,
                     std::span<double> out_means);

struct Moments {
    double mean;
    double sd;  // sample standard deviation, n-1 denominator
};
Moments mean_sd(std::span<const double> x);

/// Inverse standard normal CDF (rational approximation, |rel err| < 1e-14).
/// Scalar only; quantile evaluation is never batch-hot.
double norm_cdf_inv(double p);

namespace detail {

struct Table {
    void (*norm_cdf)(const double* z, double* out, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    double (*sum_sq_dev)(const double* x, std::size_t n, double center);
    double (*abs_dev_sum)(const double* x, std::size_t n, double center);
    double (*weighted_abs_dev_sum)(const double* x, const double* w, std::size_t n,
                                   double center);
    void (*perm_sign_means)(const double* diffs, std::size_t n, std::uint64_t seed,
                            double* out, std::size_t n_resamples);
};

/// Per-backend tables, exposed so equivalence tests can call both variants
/// directly. Throws if the backend is unsupported.
const Table& table(Backend b);

}  // namespace detail

}  // namespace curvedress::kernels
