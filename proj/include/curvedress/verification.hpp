#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "curvedress/dressing.hpp"
#include "curvedress/rng.hpp"

namespace curvedress {

/// Continuous ranked probability score of dist against the realized price p.
/// Uses the closed form for Gaussians and the energy-form identity
/// E|X - p| - E|X - X'| / 2 for atomic distributions.
double crps(const PriceDistribution& dist, double p);

/// Pinball loss (p - q)(tau - 1{p <= q}) with q the tau-quantile of dist.
double quantile_score(const PriceDistribution& dist, double p, double tau);

/// Randomized PIT: u drawn uniformly from [F(p-), F(p)]. Exactly U(0,1) when
/// the forecast distribution is the true one, atoms included.
double pit(const PriceDistribution& dist, double p, Rng& rng);

/// Histogram counts of PIT values over equal-width bins on [0, 1]; u == 1
/// lands in the last bin.
std::vector<long> pit_histogram(std::span<const double> pits, int bins);

/// Kolmogorov-Smirnov distance between a sample and the U(0,1) CDF.
double ks_uniform_statistic(std::span<const double> sample);

struct ExceedanceRecord {
    double prob;    ///< forecast P(price > threshold)
    bool exceeded;  ///< whether the realized price exceeded the threshold
};

struct ReliabilityBin {
    int index;                ///< 1-based bin number
    double lo = 0, hi = 0;    ///< forecast-probability range [lo, hi)
    long count = 0;           ///< forecasts falling in the bin
    double mean_prob = 0;     ///< average forecast probability (0 when empty)
    double freq = 0;          ///< observed exceedance frequency (0 when empty)
};

/// Reliability diagram over equal-width probability bins. When min_prob is
/// given, records with prob <= min_prob are dropped before binning. Empty
/// bins are reported with count 0 rather than omitted.
std::vector<ReliabilityBin> reliability(std::span<const ExceedanceRecord> records, int bins = 10,
                                        std::optional<double> min_prob = std::nullopt);

struct PermutationResult {
    double observed;    ///< mean(a) - mean(b)
    double q025, q975;  ///< 2.5% / 97.5% quantiles of the permutation null
    double p_value;     ///< two-sided, add-one corrected
    int resamples;
};

/// Paired sign-flip permutation test for a difference in mean scores.
/// Throws ValidationError when the spans differ in length or hold fewer
/// than two pairs. Identical inputs give p_value == 1.
PermutationResult permutation_test(std::span<const double> a, std::span<const double> b,
                                   int resamples, std::uint64_t seed);

}  // namespace curvedress
