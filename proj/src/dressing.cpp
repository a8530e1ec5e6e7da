#include "curvedress/dressing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "curvedress/errors.hpp"
#include "curvedress/kernels.hpp"

namespace curvedress {

namespace {

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        throw ValidationError(std::string(what) + " must be finite, got " + std::to_string(x));
    }
}

}  // namespace

const char* dist_kind_name(DistKind kind) {
    switch (kind) {
        case DistKind::pushforward: return "bidask";
        case DistKind::gaussian: return "gaussian";
        case DistKind::empirical: return "empirical";
    }
    return "?";
}

std::shared_ptr<const EmpiricalBasis> EmpiricalBasis::build(std::span<const double> residuals) {
    if (residuals.empty()) throw ValidationError("empirical basis needs at least one residual");
    auto basis = std::make_shared<EmpiricalBasis>();
    basis->sorted.assign(residuals.begin(), residuals.end());
    for (double r : basis->sorted) require_finite(r, "price residual");
    std::sort(basis->sorted.begin(), basis->sorted.end());
    basis->prefix.resize(basis->sorted.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < basis->sorted.size(); ++i) {
        acc += basis->sorted[i];
        basis->prefix[i] = acc;
    }
    // E|R - R'| = (2 / n^2) * sum_j (j * r_j - sum_{i<j} r_i) over the sorted order.
    double pair = 0.0;
    for (std::size_t j = 1; j < basis->sorted.size(); ++j) {
        pair += double(j) * basis->sorted[j] - basis->prefix[j - 1];
    }
    const double n = double(basis->sorted.size());
    basis->mean_abs_pair = 2.0 * pair / (n * n);
    return basis;
}

double EmpiricalBasis::abs_dev_sum(double c) const {
    const auto k = std::size_t(std::upper_bound(sorted.begin(), sorted.end(), c) - sorted.begin());
    const double below = k ? prefix[k - 1] : 0.0;
    const double total = prefix.back();
    // sum_{r<=c} (c - r) + sum_{r>c} (r - c)
    return c * (2.0 * double(k) - double(sorted.size())) - 2.0 * below + total;
}

PriceDistribution PriceDistribution::pushforward(const StepCurve& ask, double p_hat,
                                                 const ErrorDistribution& err) {
    require_finite(p_hat, "point forecast");
    require_finite(err.mu, "error mean");
    require_finite(err.sigma, "error sd");
    if (err.sigma < 0.0) {
        throw ValidationError("error sd must be non-negative, got " + std::to_string(err.sigma));
    }

    PriceDistribution d;
    d.kind_ = DistKind::pushforward;
    const auto inv = ask.inverse(p_hat);
    d.clamped_ = inv.clamped;
    d.vol_center_ = inv.volume + err.mu;
    d.vol_sd_ = err.sigma;

    // Maximal constant price runs of the ask curve. Run j covers volumes
    // [run_starts[j], run_starts[j+1]); the last run absorbs everything above.
    const auto& pts = ask.points();
    d.run_starts_.reserve(pts.size());
    d.run_levels_.reserve(pts.size());
    for (const auto& pt : pts) {
        if (d.run_levels_.empty() || pt.price != d.run_levels_.back()) {
            d.run_starts_.push_back(pt.volume);
            d.run_levels_.push_back(pt.price);
        }
    }

    const std::size_t runs = d.run_levels_.size();
    std::vector<double> cum_all(runs, 1.0);
    if (err.sigma == 0.0) {
        // Point mass at the curve value of the anchor volume.
        for (std::size_t j = 0; j + 1 < runs; ++j) {
            cum_all[j] = d.run_starts_[j + 1] > d.vol_center_ ? 1.0 : 0.0;
        }
    } else {
        std::vector<double> z(runs - 1);
        for (std::size_t j = 0; j + 1 < runs; ++j) {
            z[j] = (d.run_starts_[j + 1] - d.vol_center_) / err.sigma;
        }
        kernels::norm_cdf(z, std::span<double>(cum_all.data(), runs - 1));
        // Guard against sub-ulp non-monotonicity so masses stay non-negative.
        for (std::size_t j = 1; j + 1 < runs; ++j) {
            cum_all[j] = std::max(cum_all[j], cum_all[j - 1]);
        }
    }

    double prev = 0.0;
    for (std::size_t j = 0; j < runs; ++j) {
        const double mass = cum_all[j] - prev;
        if (mass > 0.0) {
            d.levels_.push_back(d.run_levels_[j]);
            d.masses_.push_back(mass);
            d.cum_.push_back(cum_all[j]);
        }
        prev = cum_all[j];
    }
    d.cum_.back() = 1.0;
    d.degenerate_ = d.levels_.size() == 1 && err.sigma > 0.0;
    return d;
}

PriceDistribution PriceDistribution::gaussian(double mean, double sd) {
    require_finite(mean, "mean");
    require_finite(sd, "sd");
    if (sd < 0.0) throw ValidationError("sd must be non-negative, got " + std::to_string(sd));
    PriceDistribution d;
    d.kind_ = DistKind::gaussian;
    d.gauss_mean_ = mean;
    d.gauss_sd_ = sd;
    d.degenerate_ = sd == 0.0;
    return d;
}

PriceDistribution PriceDistribution::empirical(double p_hat,
                                               std::shared_ptr<const EmpiricalBasis> basis) {
    require_finite(p_hat, "point forecast");
    if (!basis || basis->sorted.empty()) {
        throw ValidationError("empirical distribution needs a non-empty basis");
    }
    PriceDistribution d;
    d.kind_ = DistKind::empirical;
    d.basis_ = std::move(basis);
    d.shift_ = p_hat;
    d.degenerate_ = d.basis_->sorted.front() == d.basis_->sorted.back();
    return d;
}

PriceDistribution PriceDistribution::empirical(double p_hat, std::span<const double> residuals) {
    return empirical(p_hat, EmpiricalBasis::build(residuals));
}

double PriceDistribution::cdf(double x) const {
    switch (kind_) {
        case DistKind::gaussian:
            if (gauss_sd_ == 0.0) return x >= gauss_mean_ ? 1.0 : 0.0;
            return kernels::norm_cdf((x - gauss_mean_) / gauss_sd_);
        case DistKind::empirical: {
            const auto& s = basis_->sorted;
            const auto k = std::upper_bound(s.begin(), s.end(), x - shift_) - s.begin();
            return double(k) / double(s.size());
        }
        case DistKind::pushforward: {
            const auto it = std::upper_bound(levels_.begin(), levels_.end(), x);
            if (it == levels_.begin()) return 0.0;
            return cum_[std::size_t(it - levels_.begin()) - 1];
        }
    }
    return 0.0;
}

double PriceDistribution::cdf_left(double x) const {
    switch (kind_) {
        case DistKind::gaussian:
            if (gauss_sd_ == 0.0) return x > gauss_mean_ ? 1.0 : 0.0;
            return kernels::norm_cdf((x - gauss_mean_) / gauss_sd_);
        case DistKind::empirical: {
            const auto& s = basis_->sorted;
            const auto k = std::lower_bound(s.begin(), s.end(), x - shift_) - s.begin();
            return double(k) / double(s.size());
        }
        case DistKind::pushforward: {
            const auto it = std::lower_bound(levels_.begin(), levels_.end(), x);
            if (it == levels_.begin()) return 0.0;
            return cum_[std::size_t(it - levels_.begin()) - 1];
        }
    }
    return 0.0;
}

double PriceDistribution::quantile(double tau) const {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw ValidationError("quantile level must lie in (0, 1), got " + std::to_string(tau));
    }
    switch (kind_) {
        case DistKind::gaussian:
            if (gauss_sd_ == 0.0) return gauss_mean_;
            return gauss_mean_ + gauss_sd_ * kernels::norm_cdf_inv(tau);
        case DistKind::empirical: {
            const auto& s = basis_->sorted;
            std::size_t lo = 0, hi = s.size() - 1;
            while (lo < hi) {
                const std::size_t mid = lo + (hi - lo) / 2;
                if (double(mid + 1) / double(s.size()) >= tau) hi = mid;
                else lo = mid + 1;
            }
            return shift_ + s[lo];
        }
        case DistKind::pushforward: {
            const auto it = std::lower_bound(cum_.begin(), cum_.end(), tau);
            const auto idx = std::min(std::size_t(it - cum_.begin()), cum_.size() - 1);
            return levels_[idx];
        }
    }
    return 0.0;
}

double PriceDistribution::exceedance(double threshold) const { return 1.0 - cdf(threshold); }

std::vector<double> PriceDistribution::sample(std::size_t n, Rng& rng) const {
    std::vector<double> out(n);
    switch (kind_) {
        case DistKind::gaussian:
            for (double& x : out) x = gauss_mean_ + gauss_sd_ * rng.normal();
            break;
        case DistKind::empirical: {
            const auto& s = basis_->sorted;
            for (double& x : out) {
                auto idx = std::size_t(rng.uniform() * double(s.size()));
                x = shift_ + s[std::min(idx, s.size() - 1)];
            }
            break;
        }
        case DistKind::pushforward:
            for (double& x : out) {
                const double v = vol_center_ + vol_sd_ * rng.normal();
                const auto it = std::upper_bound(run_starts_.begin(), run_starts_.end(), v);
                const auto run = it == run_starts_.begin() ? std::size_t(0)
                                                          : std::size_t(it - run_starts_.begin()) - 1;
                x = run_levels_[run];
            }
            break;
    }
    return out;
}

PriceDistribution gaussian_benchmark(double p_hat, std::span<const double> price_residuals) {
    if (price_residuals.size() < 2) {
        throw InsufficientHistoryError("gaussian benchmark needs at least 2 price residuals, have " +
                                       std::to_string(price_residuals.size()));
    }
    require_finite(p_hat, "point forecast");
    const double ss = kernels::sum_sq_dev(price_residuals, 0.0);
    const double sd = std::sqrt(ss / double(price_residuals.size() - 1));
    return PriceDistribution::gaussian(p_hat, sd);
}

PriceDistribution empirical_benchmark(double p_hat, std::shared_ptr<const EmpiricalBasis> basis) {
    if (!basis || basis->sorted.empty()) {
        throw InsufficientHistoryError("empirical benchmark needs at least 1 price residual");
    }
    return PriceDistribution::empirical(p_hat, std::move(basis));
}

}  // namespace curvedress
