#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "curvedress/curves.hpp"
#include "curvedress/rng.hpp"
#include "curvedress/volmodel.hpp"

namespace curvedress {

/// Flavour of a predictive price distribution.
enum class DistKind {
    pushforward,  ///< volume-error distribution pushed through an ask curve
    gaussian,     ///< Gaussian in price space
    empirical,    ///< uniform atoms at p_hat + past price residuals
};

const char* dist_kind_name(DistKind kind);

/// Shared, immutable support structure for empirical price distributions.
/// One basis is built per history snapshot and reused across hours; only the
/// location shift (the point forecast) differs between distributions.
struct EmpiricalBasis {
    std::vector<double> sorted;  ///< residuals r = p_hat - p, ascending
    std::vector<double> prefix;  ///< prefix[i] = sum of sorted[0..i]
    double mean_abs_pair = 0.0;  ///< E|R - R'| for independent draws

    /// Builds the basis from residuals (at least one required).
    static std::shared_ptr<const EmpiricalBasis> build(std::span<const double> residuals);

    /// Sum of |sorted[i] - c| over all residuals, via prefix sums.
    double abs_dev_sum(double c) const;
};

/// An immutable predictive distribution for the spot price of one delivery
/// hour. All three kinds expose the same cdf/quantile/sample interface; the
/// scoring code additionally reads kind-specific internals.
class PriceDistribution {
  public:
    /// Pushes the volume-error law N(mu, sigma^2) around v_hat = inverse(ask,
    /// p_hat) through the ask curve. Each maximal constant price run of the
    /// curve receives the Gaussian volume mass of its run interval; mass
    /// outside the curve domain is absorbed by the first/last price level.
    /// sigma == 0 degenerates to a point mass at the curve value of
    /// v_hat + mu. Throws ValidationError for sigma < 0 or non-finite p_hat.
    static PriceDistribution pushforward(const StepCurve& ask, double p_hat,
                                         const ErrorDistribution& err);

    /// Gaussian benchmark N(mean, sd^2); sd == 0 is a (flagged) point mass.
    static PriceDistribution gaussian(double mean, double sd);

    /// Empirical benchmark: uniform atoms at p_hat + r over a shared basis.
    static PriceDistribution empirical(double p_hat, std::shared_ptr<const EmpiricalBasis> basis);
    static PriceDistribution empirical(double p_hat, std::span<const double> residuals);

    DistKind kind() const { return kind_; }

    /// Right-continuous CDF F(x) = P(price <= x).
    double cdf(double x) const;

    /// Left limit F(x-) = P(price < x).
    double cdf_left(double x) const;

    /// Generalized inverse inf{x : F(x) >= tau}; requires tau in (0, 1).
    double quantile(double tau) const;

    /// Strict exceedance P(price > threshold) = 1 - F(threshold).
    double exceedance(double threshold) const;

    /// Draws n prices. Pushforward sampling draws a volume error and
    /// evaluates the curve; it never inverts the atomic CDF.
    std::vector<double> sample(std::size_t n, Rng& rng) const;

    /// True when the point forecast fell outside the price range of the ask
    /// curve and the anchor volume was clamped to the domain boundary.
    bool clamped() const { return clamped_; }

    /// True when a single price level carries all mass even though the error
    /// scale was positive (flat curve or zero benchmark spread).
    bool degenerate() const { return degenerate_; }

    // Kind-specific internals used by verification and tests.
    const std::vector<double>& levels() const { return levels_; }  ///< atom prices, ascending
    const std::vector<double>& masses() const { return masses_; }  ///< positive atom masses
    const std::vector<double>& cum() const { return cum_; }        ///< cumulative masses
    double gauss_mean() const { return gauss_mean_; }
    double gauss_sd() const { return gauss_sd_; }
    const EmpiricalBasis& basis() const { return *basis_; }
    double shift() const { return shift_; }
    double anchor_volume() const { return vol_center_; }  ///< v_hat + mu
    double volume_sd() const { return vol_sd_; }

  private:
    PriceDistribution() = default;

    DistKind kind_ = DistKind::pushforward;
    bool clamped_ = false;
    bool degenerate_ = false;

    // pushforward: parallel arrays over price levels with positive mass.
    std::vector<double> levels_;
    std::vector<double> masses_;
    std::vector<double> cum_;
    std::vector<double> run_starts_;  ///< volume where each run begins (full partition)
    std::vector<double> run_levels_;  ///< price of each run (full partition)
    double vol_center_ = 0.0;
    double vol_sd_ = 0.0;

    // gaussian
    double gauss_mean_ = 0.0;
    double gauss_sd_ = 0.0;

    // empirical
    std::shared_ptr<const EmpiricalBasis> basis_;
    double shift_ = 0.0;
};

/// Gaussian benchmark for one hour: N(p_hat, sigma_hat^2) with sigma_hat^2 =
/// sum(r^2) / (N - 1) over pooled price residuals r = p_hat - p (no
/// centering). Throws InsufficientHistoryError for fewer than two residuals.
PriceDistribution gaussian_benchmark(double p_hat, std::span<const double> price_residuals);

/// Empirical benchmark for one hour: uniform atoms at p_hat + r.
/// Throws InsufficientHistoryError when the history is empty.
PriceDistribution empirical_benchmark(double p_hat, std::shared_ptr<const EmpiricalBasis> basis);

}  // namespace curvedress
