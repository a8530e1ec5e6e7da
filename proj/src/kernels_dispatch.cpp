#include <cassert>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>

#include "kernels_impl.hpp"

namespace curvedress::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(CURVEDRESS_HAVE_AVX2_TU)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend detect_backend() {
    if (const char* env = std::getenv("CURVEDRESS_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Backend::avx2;
        // Unknown or unsupported request: fall through to auto detection.
    }
    return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

Backend& active_slot() {
    static Backend b = detect_backend();
    return b;
}

}  // namespace

Backend active_backend() { return active_slot(); }

const char* backend_name(Backend b) {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

bool backend_supported(Backend b) {
    return b == Backend::scalar || cpu_has_avx2();
}

void force_backend(Backend b) {
    if (!backend_supported(b))
        throw std::runtime_error(std::string("kernel backend not supported here: ") +
                                 backend_name(b));
    active_slot() = b;
}

namespace detail {

const Table& table(Backend b) {
    if (b == Backend::scalar) return scalar_table();
#if defined(CURVEDRESS_HAVE_AVX2_TU)
    if (cpu_has_avx2()) return avx2_table();
#endif
    throw std::runtime_error("kernel backend not supported here: avx2");
}

}  // namespace detail

void norm_cdf(std::span<const double> z, std::span<double> out) {
    assert(out.size() >= z.size());
    detail::table(active_backend()).norm_cdf(z.data(), out.data(), z.size());
}

double norm_cdf(double z) { return detail::norm_cdf_one(z); }

double sum(std::span<const double> x) {
    return detail::table(active_backend()).sum(x.data(), x.size());
}

double sum_sq_dev(std::span<const double> x, double center) {
    return detail::table(active_backend()).sum_sq_dev(x.data(), x.size(), center);
}

double abs_dev_sum(std::span<const double> x, double center) {
    return detail::table(active_backend()).abs_dev_sum(x.data(), x.size(), center);
}

double weighted_abs_dev_sum(std::span<const double> x, std::span<const double> w,
                            double center) {
    assert(w.size() >= x.size());
    return detail::table(active_backend())
        .weighted_abs_dev_sum(x.data(), w.data(), x.size(), center);
}

void perm_sign_means(std::span<const double> diffs, std::uint64_t seed,
                     std::span<double> out_means) {
    detail::table(active_backend())
        .perm_sign_means(diffs.data(), diffs.size(), seed, out_means.data(),
                         out_means.size());
}

Moments mean_sd(std::span<const double> x) {
    const auto n = x.size();
    if (n == 0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan};
    }
    const double mean = sum(x) / static_cast<double>(n);
    if (n == 1) return {mean, 0.0};
    const double ss = sum_sq_dev(x, mean);
    return {mean, std::sqrt(ss / static_cast<double>(n - 1))};
}

namespace {

// Wichura's algorithm AS 241, PPND16.
constexpr std::array<double, 8> kPpndA = {
    2.5090809287301226727e3, 3.3430575583588128105e4, 6.7265770927008700853e4,
    4.5921953931549871457e4, 1.3731693765509461125e4, 1.9715909503065514427e3,
    1.3314166789178437745e2, 3.3871328727963666080e0,
};
constexpr std::array<double, 7> kPpndB = {
    5.2264952788528545610e3, 2.8729085735721942674e4, 3.9307895800092710610e4,
    2.1213794301586595867e4, 5.3941960214247511077e3, 6.8718700749205790830e2,
    4.2313330701600911252e1,
};
constexpr std::array<double, 8> kPpndC = {
    7.74545014278341407640e-4, 2.27238449892691845833e-2,
    2.41780725177450611770e-1, 1.27045825245236838258e0,
    3.64784832476320460504e0,  5.76949722146069140550e0,
    4.63033784615654529590e0,  1.42343711074968357734e0,
};
constexpr std::array<double, 7> kPpndD = {
    1.05075007164441684324e-9, 5.47593808499534494600e-4,
    1.51986665636164571966e-2, 1.48103976427480074590e-1,
    6.89767334985100004550e-1, 1.67638483018380384940e0,
    2.05319162663775882187e0,
};
constexpr std::array<double, 8> kPpndE = {
    2.01033439929228813265e-7, 2.71155556874348757815e-5,
    1.24266094738807843860e-3, 2.65321895265761230930e-2,
    2.96560571828504891230e-1, 1.78482653991729133580e0,
    5.46378491116411436990e0,  6.65790464350110377720e0,
};
constexpr std::array<double, 7> kPpndF = {
    2.04426310338993978564e-15, 1.42151175831644588870e-9,
    1.84631831751005468180e-6,  7.86869131145613259100e-4,
    1.48753612908506148525e-2,  1.36929880922735805310e-1,
    5.99832206555887937690e-1,
};

template <std::size_t N>
constexpr double horner(double x, const std::array<double, N>& c) {
    double r = c[0];
    for (std::size_t i = 1; i < N; ++i) r = r * x + c[i];
    return r;
}

}  // namespace

double norm_cdf_inv(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * horner(r, kPpndA) / (horner(r, kPpndB) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double z;
    if (r <= 5.0) {
        r -= 1.6;
        z = horner(r, kPpndC) / (horner(r, kPpndD) * r + 1.0);
    } else {
        r -= 5.0;
        z = horner(r, kPpndE) / (horner(r, kPpndF) * r + 1.0);
    }
    return q < 0.0 ? -z : z;
}

}  // namespace curvedress::kernels
