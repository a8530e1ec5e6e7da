// Scalar reference kernels. These define the arithmetic contract: four
// independent accumulators filled in lane order, combined as
// (acc0 + acc2) + (acc1 + acc3), then the tail folded in sequentially.
// The AVX2 variants mirror this exactly, so results are bit-identical.

#include "kernels_impl.hpp"

namespace curvedress::kernels::detail {
namespace {

void norm_cdf_k(const double* z, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = norm_cdf_one(z[i]);
}

double sum_k(const double* x, std::size_t n) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 += x[i];
        a1 += x[i + 1];
        a2 += x[i + 2];
        a3 += x[i + 3];
    }
    double total = (a0 + a2) + (a1 + a3);
    for (; i < n; ++i) total += x[i];
    return total;
}

double sum_sq_dev_k(const double* x, std::size_t n, double c) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double d0 = x[i] - c;
        const double d1 = x[i + 1] - c;
        const double d2 = x[i + 2] - c;
        const double d3 = x[i + 3] - c;
        a0 = std::fma(d0, d0, a0);
        a1 = std::fma(d1, d1, a1);
        a2 = std::fma(d2, d2, a2);
        a3 = std::fma(d3, d3, a3);
    }
    double total = (a0 + a2) + (a1 + a3);
    for (; i < n; ++i) {
        const double d = x[i] - c;
        total = std::fma(d, d, total);
    }
    return total;
}

double abs_dev_sum_k(const double* x, std::size_t n, double c) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 += std::fabs(x[i] - c);
        a1 += std::fabs(x[i + 1] - c);
        a2 += std::fabs(x[i + 2] - c);
        a3 += std::fabs(x[i + 3] - c);
    }
    double total = (a0 + a2) + (a1 + a3);
    for (; i < n; ++i) total += std::fabs(x[i] - c);
    return total;
}

double weighted_abs_dev_sum_k(const double* x, const double* w, std::size_t n,
                              double c) {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        a0 = std::fma(w[i], std::fabs(x[i] - c), a0);
        a1 = std::fma(w[i + 1], std::fabs(x[i + 1] - c), a1);
        a2 = std::fma(w[i + 2], std::fabs(x[i + 2] - c), a2);
        a3 = std::fma(w[i + 3], std::fabs(x[i + 3] - c), a3);
    }
    double total = (a0 + a2) + (a1 + a3);
    for (; i < n; ++i) total = std::fma(w[i], std::fabs(x[i] - c), total);
    return total;
}

void perm_sign_means_k(const double* diffs, std::size_t n, std::uint64_t seed,
                       double* out, std::size_t n_resamples) {
    for (std::size_t r = 0; r < n_resamples; ++r) {
        const std::uint64_t base = static_cast<std::uint64_t>(r) * n;
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        std::size_t i = 0;
        for (; i + 4 <= n; i += 4) {
            a0 += sign_flipped(diffs[i], seed, base + i + 1);
            a1 += sign_flipped(diffs[i + 1], seed, base + i + 2);
            a2 += sign_flipped(diffs[i + 2], seed, base + i + 3);
            a3 += sign_flipped(diffs[i + 3], seed, base + i + 4);
        }
        double total = (a0 + a2) + (a1 + a3);
        for (; i < n; ++i) total += sign_flipped(diffs[i], seed, base + i + 1);
        out[r] = total / static_cast<double>(n);
    }
}

}  // namespace

const Table& scalar_table() {
    static const Table t{norm_cdf_k,    sum_k,
                         sum_sq_dev_k,  abs_dev_sum_k,
                         weighted_abs_dev_sum_k, perm_sign_means_k};
    return t;
}

}  // namespace curvedress::kernels::detail
