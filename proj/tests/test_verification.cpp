#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "curvedress/dressing.hpp"
#include "curvedress/kernels.hpp"
#include "curvedress/rng.hpp"
#include "curvedress/verification.hpp"

using namespace curvedress;

namespace {

// Oracle: CRPS as the Brier-integral of the forecast CDF against the step at
// p, by Simpson's rule over a wide bracket.
double crps_integral_gaussian(double mean, double sd, double p) {
    // The integrand jumps at p, so integrate the two smooth pieces separately.
    auto F = [&](double x) { return 0.5 * std::erfc(-(x - mean) / sd / std::sqrt(2.0)); };
    auto simpson = [](auto g, double a, double b) {
        const int n = 20000;  // even
        const double h = (b - a) / n;
        double s = g(a) + g(b);
        for (int i = 1; i < n; ++i) s += g(a + i * h) * (i % 2 ? 4.0 : 2.0);
        return s * h / 3.0;
    };
    const double lo = std::min(mean, p) - 12.0 * sd;
    const double hi = std::max(mean, p) + 12.0 * sd;
    return simpson([&](double x) { return F(x) * F(x); }, lo, p) +
           simpson([&](double x) { return (1.0 - F(x)) * (1.0 - F(x)); }, p, hi);
}

// Oracle: CRPS of an atomic distribution via the exact piecewise-constant
// integral of (F - H)^2 between consecutive support points.
double crps_integral_atomic(const std::vector<double>& levels,
                            const std::vector<double>& cum, double p) {
    std::vector<double> knots = levels;
    knots.push_back(p);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    auto F = [&](double x) {
        const auto it = std::upper_bound(levels.begin(), levels.end(), x);
        if (it == levels.begin()) return 0.0;
        return cum[std::size_t(it - levels.begin()) - 1];
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double x = knots[i];  // value on [knots[i], knots[i+1])
        const double g = F(x) - (x >= p ? 1.0 : 0.0);
        total += g * g * (knots[i + 1] - knots[i]);
    }
    return total;
}

// Oracle: energy form with explicit O(n^2) loops.
double crps_pairwise_atomic(const std::vector<double>& levels,
                            const std::vector<double>& masses, double p) {
    double e_abs = 0.0, e_pair = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        e_abs += masses[i] * std::fabs(levels[i] - p);
        for (std::size_t j = 0; j < levels.size(); ++j) {
            e_pair += masses[i] * masses[j] * std::fabs(levels[i] - levels[j]);
        }
    }
    return e_abs - 0.5 * e_pair;
}

StepCurve staircase_ask(Rng& rng, int steps = 20) {
    std::vector<CurvePoint> pts;
    double v = 0.0, p = 5.0 + 10.0 * rng.uniform();
    for (int i = 0; i < steps; ++i) {
        pts.push_back({v, p});
        v += 600.0 * (0.3 + rng.uniform());
        p += 10.0 * rng.uniform();
    }
    return StepCurve(Side::ask, std::move(pts));
}

}  // namespace

TEST_CASE("gaussian crps matches numerical integration") {
    struct Case { double mean, sd, p; };
    const Case cases[] = {{0, 1, 0},    {0, 1, 1.7},  {0, 1, -2.3}, {30, 5, 28},
                          {30, 5, 55},  {-10, 0.5, -10.2}, {100, 40, 0}};
    for (const auto& c : cases) {
        const auto d = PriceDistribution::gaussian(c.mean, c.sd);
        CHECK(crps(d, c.p) ==
              doctest::Approx(crps_integral_gaussian(c.mean, c.sd, c.p)).epsilon(1e-7));
    }
    // Closed-form special values: CRPS at the mean of a standard normal is
    // sigma * (2 phi(0) - 1/sqrt(pi)) = sigma * (sqrt(2)-1)/sqrt(pi).
    const auto d = PriceDistribution::gaussian(0.0, 1.0);
    CHECK(crps(d, 0.0) ==
          doctest::Approx((std::sqrt(2.0) - 1.0) / std::sqrt(std::acos(-1.0))).epsilon(1e-14));
    // Degenerate sd: absolute error.
    CHECK(crps(PriceDistribution::gaussian(10.0, 0.0), 14.0) == 4.0);
}

TEST_CASE("atomic crps matches both independent oracles") {
    Rng rng(321);
    for (int trial = 0; trial < 30; ++trial) {
        const auto ask = staircase_ask(rng);
        const auto d = PriceDistribution::pushforward(
            ask, ask.price_min() + (ask.price_max() - ask.price_min()) * rng.uniform(),
            {200.0 * (rng.uniform() - 0.5), 100.0 + 900.0 * rng.uniform(), Regime::kink});
        for (int j = 0; j < 5; ++j) {
            const double p = ask.price_min() - 5.0 +
                             (ask.price_max() - ask.price_min() + 10.0) * rng.uniform();
            const double got = crps(d, p);
            CHECK(got == doctest::Approx(crps_pairwise_atomic(d.levels(), d.masses(), p))
                             .epsilon(1e-11));
            CHECK(got ==
                  doctest::Approx(crps_integral_atomic(d.levels(), d.cum(), p)).epsilon(1e-11));
        }
    }
}

TEST_CASE("empirical crps matches the pairwise oracle") {
    Rng rng(654);
    std::vector<double> residuals(150);
    for (double& r : residuals) r = 25.0 * (rng.uniform() - 0.5);
    const double p_hat = 40.0;
    const auto d = PriceDistribution::empirical(p_hat, residuals);

    std::vector<double> atoms(residuals.size());
    for (std::size_t i = 0; i < residuals.size(); ++i) atoms[i] = p_hat + residuals[i];
    std::sort(atoms.begin(), atoms.end());
    const std::vector<double> w(atoms.size(), 1.0 / double(atoms.size()));
    for (double p : {20.0, 38.5, 40.0, 41.2, 70.0}) {
        CHECK(crps(d, p) == doctest::Approx(crps_pairwise_atomic(atoms, w, p)).epsilon(1e-11));
    }
    // Single atom: plain absolute error.
    const std::vector<double> one = {2.5};
    CHECK(crps(PriceDistribution::empirical(10.0, one), 20.0) == doctest::Approx(7.5));
}

TEST_CASE("crps is reported in price units and positive off-support") {
    const std::vector<double> r = {0.0};
    const auto d = PriceDistribution::empirical(100.0, r);
    CHECK(crps(d, 100.0) == 0.0);
    CHECK(crps(d, 103.0) == 3.0);
    CHECK_THROWS_AS(crps(d, std::nan("")), ValidationError);
}

TEST_CASE("quantile score pinball form") {
    // Single-atom distribution pins the quantile at 10 for every tau.
    const std::vector<double> r = {0.0};
    const auto d = PriceDistribution::empirical(10.0, r);
    CHECK(quantile_score(d, 20.0, 0.9) == doctest::Approx(9.0));
    CHECK(quantile_score(d, 5.0, 0.9) == doctest::Approx(0.5));
    CHECK(quantile_score(d, 20.0, 0.1) == doctest::Approx(1.0));
    CHECK(quantile_score(d, 5.0, 0.1) == doctest::Approx(4.5));
    CHECK(quantile_score(d, 10.0, 0.9) == 0.0);  // p == q counts as covered
    CHECK_THROWS_AS(quantile_score(d, 1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(quantile_score(d, 1.0, 1.0), ValidationError);

    // Expected pinball loss is minimized near the true quantile.
    const auto g = PriceDistribution::gaussian(0.0, 1.0);
    Rng rng(9);
    double loss_true = 0.0, loss_off = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double p = rng.normal();
        loss_true += quantile_score(g, p, 0.8);
        const double q_off = 0.0;  // the 50% point instead of the 80% point
        loss_off += (p - q_off) * (0.8 - (p <= q_off ? 1.0 : 0.0));
    }
    CHECK(loss_true < loss_off);
}

TEST_CASE("pit is deterministic for continuous and randomized at atoms") {
    const auto g = PriceDistribution::gaussian(10.0, 2.0);
    Rng rng(31);
    const double u = pit(g, 11.0, rng);
    CHECK(u == doctest::Approx(g.cdf(11.0)).epsilon(1e-15));

    const std::vector<double> r = {-1.0, 0.0, 1.0};
    const auto e = PriceDistribution::empirical(50.0, r);
    // At the middle atom F- = 1/3, F = 2/3.
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 4000; ++i) {
        const double v = pit(e, 50.0, rng);
        CHECK(v >= 1.0 / 3.0);
        CHECK(v < 2.0 / 3.0);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo < 1.0 / 3.0 + 0.01);  // interval actually filled
    CHECK(hi > 2.0 / 3.0 - 0.01);
    // Off-support points are deterministic.
    CHECK(pit(e, 49.5, rng) == doctest::Approx(1.0 / 3.0));
    CHECK(pit(e, 100.0, rng) == 1.0);
    CHECK(pit(e, 0.0, rng) == 0.0);
}

TEST_CASE("pit of draws from the forecast itself is uniform") {
    // Keystone property, here for a heavily atomic distribution.
    Rng rng(77);
    const auto ask = staircase_ask(rng, 12);
    const auto d = PriceDistribution::pushforward(
        ask, 0.5 * (ask.price_min() + ask.price_max()), {50.0, 800.0, Regime::kink});

    const int n = 20000;
    Rng sample_rng(123), pit_rng(456);
    const auto xs = d.sample(n, sample_rng);
    std::vector<double> us(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) us[i] = pit(d, xs[i], pit_rng);
    const double ks = ks_uniform_statistic(us);
    CHECK(ks < 1.628 / std::sqrt(double(n)));  // 1% critical value
}

TEST_CASE("pit histogram binning") {
    const std::vector<double> us = {0.0, 0.05, 0.15, 0.95, 1.0, 0.999, 0.3};
    const auto h = pit_histogram(us, 10);
    REQUIRE(h.size() == 10);
    CHECK(h[0] == 2);  // 0.0 and 0.05
    CHECK(h[1] == 1);
    CHECK(h[3] == 1);
    CHECK(h[9] == 3);  // 0.95, 1.0 (clamped into the last bin), 0.999
    long total = 0;
    for (long c : h) total += c;
    CHECK(total == long(us.size()));

    CHECK_THROWS_AS(pit_histogram(std::vector<double>{1.5}, 10), ValidationError);
    CHECK_THROWS_AS(pit_histogram(std::vector<double>{-0.1}, 10), ValidationError);
    CHECK_THROWS_AS(pit_histogram(us, 0), ValidationError);
}

TEST_CASE("ks statistic") {
    CHECK(ks_uniform_statistic(std::vector<double>{0.5}) == doctest::Approx(0.5));
    CHECK(ks_uniform_statistic(std::vector<double>{0.25, 0.75}) == doctest::Approx(0.25));
    // The centered grid attains the minimum possible distance 1/(2n).
    std::vector<double> grid(100);
    for (int i = 0; i < 100; ++i) grid[std::size_t(i)] = (i + 0.5) / 100.0;
    CHECK(ks_uniform_statistic(grid) == doctest::Approx(0.005));
    // Order must not matter.
    std::reverse(grid.begin(), grid.end());
    CHECK(ks_uniform_statistic(grid) == doctest::Approx(0.005));
    CHECK_THROWS_AS(ks_uniform_statistic(std::span<const double>{}), ValidationError);
}

TEST_CASE("reliability diagram binning and filtering") {
    std::vector<ExceedanceRecord> recs = {
        {0.05, false}, {0.05, false}, {0.08, true},   // bin 1
        {0.55, true},  {0.55, false},                 // bin 6
        {0.95, true},  {0.97, true},  {1.0, true},    // bin 10 (1.0 clamped in)
    };
    const auto bins = reliability(recs, 10);
    REQUIRE(bins.size() == 10);
    CHECK(bins[0].index == 1);
    CHECK(bins[0].lo == 0.0);
    CHECK(bins[0].hi == doctest::Approx(0.1));
    CHECK(bins[0].count == 3);
    CHECK(bins[0].mean_prob == doctest::Approx(0.06));
    CHECK(bins[0].freq == doctest::Approx(1.0 / 3.0));
    CHECK(bins[5].count == 2);
    CHECK(bins[5].freq == doctest::Approx(0.5));
    CHECK(bins[9].count == 3);
    CHECK(bins[9].mean_prob == doctest::Approx((0.95 + 0.97 + 1.0) / 3.0));
    CHECK(bins[9].freq == doctest::Approx(1.0));
    // Empty bins are present with zeroed stats.
    CHECK(bins[2].count == 0);
    CHECK(bins[2].mean_prob == 0.0);
    CHECK(bins[2].freq == 0.0);

    // Strict filter: prob <= min_prob drops, prob just above stays.
    const auto filtered = reliability(recs, 10, 0.1);
    CHECK(filtered[0].count == 0);
    CHECK(filtered[5].count == 2);
    const std::vector<ExceedanceRecord> edge = {{0.1, true}, {0.1000001, false}};
    const auto fe = reliability(edge, 10, 0.1);
    CHECK(fe[0].count == 0);
    CHECK(fe[1].count == 1);

    CHECK_THROWS_AS(reliability(recs, 0), ValidationError);
}

TEST_CASE("permutation test detects a shifted pair and accepts identity") {
    std::vector<double> b(100), a(100);
    Rng rng(55);
    for (std::size_t i = 0; i < b.size(); ++i) {
        b[i] = rng.normal();
        a[i] = b[i] + 1.0;
    }
    const auto res = permutation_test(a, b, 10000, 17);
    CHECK(res.observed == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.resamples == 10000);
    CHECK(res.q025 < res.q975);
    CHECK((res.observed < res.q025 || res.observed > res.q975));
    CHECK(res.p_value < 0.001);

    // Identical inputs: every resample ties the observed zero.
    const auto same = permutation_test(a, a, 2000, 3);
    CHECK(same.observed == 0.0);
    CHECK(same.p_value == 1.0);

    // Exchangeable pairs with no true difference: comfortably inside.
    std::vector<double> c(200), d(200);
    for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] = rng.normal();
        d[i] = rng.normal();
    }
    const auto null_res = permutation_test(c, d, 4000, 11);
    CHECK(null_res.p_value > 0.01);

    // Determinism.
    const auto r1 = permutation_test(a, b, 500, 99);
    const auto r2 = permutation_test(a, b, 500, 99);
    CHECK(r1.p_value == r2.p_value);
    CHECK(r1.q025 == r2.q025);

    CHECK_THROWS_AS(permutation_test(a, std::span<const double>(b).first(50), 100, 1),
                    ValidationError);
    const std::vector<double> tiny = {1.0};
    CHECK_THROWS_AS(permutation_test(tiny, tiny, 100, 1), ValidationError);
    CHECK_THROWS_AS(permutation_test(a, b, 0, 1), ValidationError);
}
