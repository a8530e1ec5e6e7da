#include "curvedress/verification.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "curvedress/errors.hpp"
#include "curvedress/kernels.hpp"

namespace curvedress {

namespace {

constexpr double kInvSqrtPi = 0.5641895835477562869;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

/// E|X - X'| over the atoms of a pushforward distribution, via one pass over
/// the sorted levels: 2 * sum_j w_j * (x_j * W_{j-1} - sum_{i<j} w_i x_i).
double atomic_mean_abs_pair(const std::vector<double>& x, const std::vector<double>& w,
                            const std::vector<double>& cum) {
    double pair = 0.0;
    double tx = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (j > 0) pair += w[j] * (x[j] * cum[j - 1] - tx);
        tx += w[j] * x[j];
    }
    return 2.0 * pair;
}

double quantile_type7(const std::vector<double>& sorted, double q) {
    const double h = (double(sorted.size()) - 1.0) * q;
    const auto lo = std::size_t(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - double(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

double crps(const PriceDistribution& dist, double p) {
    if (!std::isfinite(p)) throw ValidationError("realized price must be finite");
    switch (dist.kind()) {
        case DistKind::gaussian: {
            const double sd = dist.gauss_sd();
            if (sd == 0.0) return std::abs(p - dist.gauss_mean());
            const double z = (p - dist.gauss_mean()) / sd;
            const double phi = kInvSqrt2Pi * std::exp(-0.5 * z * z);
            return sd * (z * (2.0 * kernels::norm_cdf(z) - 1.0) + 2.0 * phi - kInvSqrtPi);
        }
        case DistKind::empirical: {
            const auto& basis = dist.basis();
            const double e_abs =
                basis.abs_dev_sum(p - dist.shift()) / double(basis.sorted.size());
            return e_abs - 0.5 * basis.mean_abs_pair;
        }
        case DistKind::pushforward: {
            const double e_abs = kernels::weighted_abs_dev_sum(dist.levels(), dist.masses(), p);
            return e_abs - 0.5 * atomic_mean_abs_pair(dist.levels(), dist.masses(), dist.cum());
        }
    }
    return 0.0;
}

double quantile_score(const PriceDistribution& dist, double p, double tau) {
    if (!std::isfinite(p)) throw ValidationError("realized price must be finite");
    const double q = dist.quantile(tau);
    const double indicator = p <= q ? 1.0 : 0.0;
    return (p - q) * (tau - indicator);
}

double pit(const PriceDistribution& dist, double p, Rng& rng) {
    if (!std::isfinite(p)) throw ValidationError("realized price must be finite");
    const double hi = dist.cdf(p);
    const double lo = dist.cdf_left(p);
    if (hi <= lo) return hi;
    return lo + rng.uniform() * (hi - lo);
}

std::vector<long> pit_histogram(std::span<const double> pits, int bins) {
    if (bins < 1) throw ValidationError("histogram needs at least one bin");
    std::vector<long> counts(std::size_t(bins), 0);
    for (double u : pits) {
        if (!(u >= 0.0 && u <= 1.0)) {
            throw ValidationError("PIT value outside [0, 1]: " + std::to_string(u));
        }
        const auto bin = std::min(std::size_t(bins) - 1, std::size_t(u * bins));
        ++counts[bin];
    }
    return counts;
}

double ks_uniform_statistic(std::span<const double> sample) {
    if (sample.empty()) throw ValidationError("KS statistic needs a non-empty sample");
    std::vector<double> u(sample.begin(), sample.end());
    std::sort(u.begin(), u.end());
    const double n = double(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        d = std::max(d, std::max(double(i + 1) / n - u[i], u[i] - double(i) / n));
    }
    return d;
}

std::vector<ReliabilityBin> reliability(std::span<const ExceedanceRecord> records, int bins,
                                        std::optional<double> min_prob) {
    if (bins < 1) throw ValidationError("reliability diagram needs at least one bin");
    std::vector<ReliabilityBin> out(static_cast<std::size_t>(bins));
    std::vector<double> prob_sum(std::size_t(bins), 0.0);
    std::vector<long> exceed_count(std::size_t(bins), 0);
    for (int i = 0; i < bins; ++i) {
        out[std::size_t(i)].index = i + 1;
        out[std::size_t(i)].lo = double(i) / bins;
        out[std::size_t(i)].hi = double(i + 1) / bins;
    }
    for (const auto& rec : records) {
        if (!(rec.prob >= 0.0 && rec.prob <= 1.0)) {
            throw ValidationError("exceedance probability outside [0, 1]: " +
                                  std::to_string(rec.prob));
        }
        if (min_prob && !(rec.prob > *min_prob)) continue;
        const auto bin = std::min(std::size_t(bins) - 1, std::size_t(rec.prob * bins));
        ++out[bin].count;
        prob_sum[bin] += rec.prob;
        if (rec.exceeded) ++exceed_count[bin];
    }
    for (std::size_t b = 0; b < out.size(); ++b) {
        if (out[b].count > 0) {
            out[b].mean_prob = prob_sum[b] / double(out[b].count);
            out[b].freq = double(exceed_count[b]) / double(out[b].count);
        }
    }
    return out;
}

PermutationResult permutation_test(std::span<const double> a, std::span<const double> b,
                                   int resamples, std::uint64_t seed) {
    if (a.size() != b.size()) {
        throw ValidationError("permutation test: length mismatch (" + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()) + ")");
    }
    if (a.size() < 2) throw ValidationError("permutation test needs at least 2 pairs");
    if (resamples < 1) throw ValidationError("permutation test needs at least 1 resample");

    std::vector<double> diffs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];
    const double observed = kernels::sum(diffs) / double(diffs.size());

    std::vector<double> nulls(static_cast<std::size_t>(resamples));
    kernels::perm_sign_means(diffs, seed, nulls);

    long at_least = 0;
    for (double m : nulls) {
        if (std::abs(m) >= std::abs(observed)) ++at_least;
    }
    std::sort(nulls.begin(), nulls.end());
    PermutationResult res;
    res.observed = observed;
    res.q025 = quantile_type7(nulls, 0.025);
    res.q975 = quantile_type7(nulls, 0.975);
    res.p_value = double(1 + at_least) / double(resamples + 1);
    res.resamples = resamples;
    return res;
}

}  // namespace curvedress
