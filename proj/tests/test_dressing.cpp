#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "curvedress/dressing.hpp"
#include "curvedress/kernels.hpp"
#include "curvedress/rng.hpp"

using namespace curvedress;

namespace {

StepCurve staircase_ask(Rng& rng, int steps = 25, double v0 = 0.0, double span = 10000.0) {
    std::vector<CurvePoint> pts;
    double v = v0, p = 5.0 + 10.0 * rng.uniform();
    for (int i = 0; i < steps; ++i) {
        pts.push_back({v, p});
        v += span / steps * (0.3 + rng.uniform());
        p += 12.0 * rng.uniform();
    }
    return StepCurve(Side::ask, std::move(pts));
}

// MC oracle: empirical CDF of curve(value of a Gaussian volume draw).
double mc_cdf(const StepCurve& ask, double center, double sd, double probe, int n,
              Rng& rng) {
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        const double v = center + sd * rng.normal();
        if (ask.eval(v) <= probe) ++hits;
    }
    return double(hits) / n;
}

}  // namespace

TEST_CASE("pushforward atoms form a probability distribution") {
    Rng rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const auto ask = staircase_ask(rng);
        const double p_hat =
            ask.price_min() + (ask.price_max() - ask.price_min()) * rng.uniform();
        const ErrorDistribution err{400.0 * (rng.uniform() - 0.5),
                                    100.0 + 900.0 * rng.uniform(), Regime::kink};
        const auto d = PriceDistribution::pushforward(ask, p_hat, err);

        REQUIRE(!d.levels().empty());
        CHECK(d.levels().size() == d.masses().size());
        CHECK(d.levels().size() == d.cum().size());
        CHECK(std::is_sorted(d.levels().begin(), d.levels().end()));
        double total = 0.0;
        for (double m : d.masses()) {
            CHECK(m > 0.0);
            total += m;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(d.cum().back() == 1.0);  // exactly, by construction
        for (std::size_t i = 1; i < d.cum().size(); ++i) CHECK(d.cum()[i] > d.cum()[i - 1]);
        CHECK(d.anchor_volume() == ask.inverse(p_hat).volume + err.mu);
        CHECK(d.volume_sd() == err.sigma);
    }
}

TEST_CASE("pushforward cdf equals the volume-space analytic form") {
    // Oracle: for probe p strictly inside the price range, P(price <= p) =
    // Phi((sup-inverse(p) - center) / sigma), because the price is at most p
    // exactly when the volume draw lands below the level-set supremum.
    Rng rng(22);
    for (int trial = 0; trial < 60; ++trial) {
        const auto ask = staircase_ask(rng);
        const double p_hat =
            ask.price_min() + (ask.price_max() - ask.price_min()) * rng.uniform();
        const ErrorDistribution err{300.0 * (rng.uniform() - 0.5),
                                    50.0 + 1200.0 * rng.uniform(), Regime::kink};
        const auto d = PriceDistribution::pushforward(ask, p_hat, err);
        const double c = d.anchor_volume();

        for (int j = 0; j < 40; ++j) {
            const double p = ask.price_min() +
                             (ask.price_max() - ask.price_min()) * rng.uniform() * 0.999;
            const auto inv = ask.inverse(p);
            if (inv.clamped) continue;
            const double expect = kernels::norm_cdf((inv.volume - c) / err.sigma);
            CHECK(d.cdf(p) == doctest::Approx(expect).epsilon(1e-12));
        }
        // Outside the range the CDF saturates.
        CHECK(d.cdf(ask.price_min() - 1.0) == 0.0);
        CHECK(d.cdf(ask.price_max() + 1.0) == 1.0);
        CHECK(d.cdf(ask.price_max()) == 1.0);
    }
}

TEST_CASE("pushforward cdf matches Monte Carlo") {
    Rng rng(33);
    for (int trial = 0; trial < 5; ++trial) {
        const auto ask = staircase_ask(rng, 18);
        const double p_hat =
            ask.price_min() + (ask.price_max() - ask.price_min()) * rng.uniform();
        const ErrorDistribution err{150.0 * (rng.uniform() - 0.5),
                                    200.0 + 800.0 * rng.uniform(), Regime::kink};
        const auto d = PriceDistribution::pushforward(ask, p_hat, err);

        const int n = 200000;
        for (int j = 0; j < 8; ++j) {
            const double p = ask.price_min() - 2.0 +
                             (ask.price_max() - ask.price_min() + 4.0) * rng.uniform();
            const double mc = mc_cdf(ask, d.anchor_volume(), err.sigma, p, n, rng);
            CHECK(d.cdf(p) == doctest::Approx(mc).epsilon(0).scale(1).epsilon(0.006));
        }
    }
}

TEST_CASE("sampling agrees with the cdf") {
    Rng rng(44);
    const auto ask = staircase_ask(rng, 20);
    const double p_hat = 0.5 * (ask.price_min() + ask.price_max());
    const ErrorDistribution err{-120.0, 700.0, Regime::tail};
    const auto d = PriceDistribution::pushforward(ask, p_hat, err);

    Rng srng(4545);
    auto xs = d.sample(100000, srng);
    std::sort(xs.begin(), xs.end());
    for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        const double probe = d.quantile(q);
        // Empirical CDF at probe vs exact CDF.
        const auto k = std::upper_bound(xs.begin(), xs.end(), probe) - xs.begin();
        CHECK(double(k) / double(xs.size()) == doctest::Approx(d.cdf(probe)).epsilon(0.02));
    }
    // Every sample is a level of the curve.
    for (double x : {xs.front(), xs.back()}) {
        bool found = false;
        for (const auto& pt : ask.points()) found = found || pt.price == x;
        CHECK(found);
    }
}

TEST_CASE("zero-mass price levels are dropped but sampling still works") {
    // Levels far beyond the reachable volume range carry no mass.
    const StepCurve ask(Side::ask, {{0, 10}, {100, 20}, {200, 30}, {1000000, 40}, {2000000, 50}});
    const ErrorDistribution err{0.0, 30.0, Regime::kink};
    const auto d = PriceDistribution::pushforward(ask, 15.0, err);
    CHECK(d.levels().size() < 5);
    CHECK(d.cdf(39.9) == 1.0);
    double total = 0.0;
    for (double m : d.masses()) total += m;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    Rng rng(5);
    const auto xs = d.sample(2000, rng);
    for (double x : xs) CHECK(x <= 30.0);
}

TEST_CASE("zero sigma is a point mass at the curve value") {
    const StepCurve ask(Side::ask, {{0, 10}, {100, 20}, {200, 100}});
    const ErrorDistribution err{0.0, 0.0, Regime::kink};
    // p_hat = 15 anchors at volume 100, where the curve pays 20.
    const auto d = PriceDistribution::pushforward(ask, 15.0, err);
    CHECK(d.levels().size() == 1);
    CHECK(d.levels()[0] == 20.0);
    CHECK(d.cdf(19.999) == 0.0);
    CHECK(d.cdf(20.0) == 1.0);
    CHECK(d.cdf_left(20.0) == 0.0);
    CHECK(d.quantile(0.5) == 20.0);
    CHECK(d.quantile(0.999) == 20.0);
    Rng rng(1);
    for (double x : d.sample(50, rng)) CHECK(x == 20.0);
    CHECK(!d.degenerate());  // deliberate zero spread is not flagged

    // With positive sigma on a flat curve the flag fires.
    const StepCurve flat(Side::ask, {{0, 42}, {1000, 42}});
    const auto f = PriceDistribution::pushforward(flat, 42.0, {0.0, 100.0, Regime::kink});
    CHECK(f.degenerate());
    CHECK(f.levels().size() == 1);
}

TEST_CASE("clamped anchor is flagged") {
    const StepCurve ask(Side::ask, {{0, 10}, {100, 20}, {200, 100}});
    CHECK(PriceDistribution::pushforward(ask, 5.0, {0.0, 10.0, Regime::kink}).clamped());
    CHECK(PriceDistribution::pushforward(ask, 100.0, {0.0, 10.0, Regime::kink}).clamped());
    CHECK(!PriceDistribution::pushforward(ask, 15.0, {0.0, 10.0, Regime::kink}).clamped());
}

TEST_CASE("cdf left limits expose atom masses") {
    Rng rng(66);
    const auto ask = staircase_ask(rng);
    const auto d = PriceDistribution::pushforward(
        ask, 0.5 * (ask.price_min() + ask.price_max()), {0.0, 500.0, Regime::kink});
    for (std::size_t i = 0; i < d.levels().size(); ++i) {
        const double L = d.levels()[i];
        CHECK(d.cdf(L) - d.cdf_left(L) == doctest::Approx(d.masses()[i]).epsilon(1e-12));
    }
    // Between atoms the two coincide.
    for (std::size_t i = 1; i < d.levels().size(); ++i) {
        const double mid = 0.5 * (d.levels()[i - 1] + d.levels()[i]);
        if (mid == d.levels()[i - 1] || mid == d.levels()[i]) continue;
        CHECK(d.cdf(mid) == d.cdf_left(mid));
    }
}

TEST_CASE("atomic quantiles pick the smallest qualifying level") {
    // Two equal atoms: the median is the lower one. inverse(15) lands exactly
    // on the run boundary at volume 100, so the mass splits 1/2 each side.
    const StepCurve ask(Side::ask, {{0, 10}, {100, 20}});
    const auto d = PriceDistribution::pushforward(ask, 15.0, {0.0, 50.0, Regime::kink});
    REQUIRE(d.levels().size() == 2);
    CHECK(d.masses()[0] == doctest::Approx(0.5));
    CHECK(d.quantile(0.5) == 10.0);
    CHECK(d.quantile(0.500001) == 20.0);
    CHECK(d.quantile(0.25) == 10.0);
    CHECK(d.quantile(0.75) == 20.0);
    CHECK_THROWS_AS(d.quantile(0.0), ValidationError);
    CHECK_THROWS_AS(d.quantile(1.0), ValidationError);
    CHECK_THROWS_AS(d.quantile(-0.5), ValidationError);
}

TEST_CASE("quantile inverts the cdf") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const auto ask = staircase_ask(rng);
        const auto d = PriceDistribution::pushforward(
            ask, ask.price_min() + (ask.price_max() - ask.price_min()) * rng.uniform(),
            {100.0 * (rng.uniform() - 0.5), 50.0 + 600.0 * rng.uniform(), Regime::kink});
        for (int j = 0; j < 30; ++j) {
            const double tau = 0.001 + 0.998 * rng.uniform();
            const double q = d.quantile(tau);
            // Generalized inverse: F(q) >= tau and F(q-) <= tau.
            CHECK(d.cdf(q) >= tau);
            CHECK(d.cdf_left(q) <= tau + 1e-12);
        }
    }
}

TEST_CASE("gaussian distribution basics") {
    const auto d = PriceDistribution::gaussian(30.0, 5.0);
    CHECK(d.kind() == DistKind::gaussian);
    CHECK(d.cdf(30.0) == doctest::Approx(0.5));
    CHECK(d.cdf_left(30.0) == d.cdf(30.0));  // continuous
    CHECK(d.quantile(0.975) == doctest::Approx(30.0 + 5.0 * 1.959963984540054).epsilon(1e-9));
    CHECK(d.exceedance(30.0) == doctest::Approx(0.5));
    Rng rng(8);
    const auto xs = d.sample(200000, rng);
    const auto m = kernels::mean_sd(xs);
    CHECK(m.mean == doctest::Approx(30.0).epsilon(0.002));
    CHECK(m.sd == doctest::Approx(5.0).epsilon(0.01));

    const auto pm = PriceDistribution::gaussian(12.0, 0.0);
    CHECK(pm.degenerate());
    CHECK(pm.cdf(11.999) == 0.0);
    CHECK(pm.cdf(12.0) == 1.0);
    CHECK(pm.cdf_left(12.0) == 0.0);
    CHECK(pm.quantile(0.3) == 12.0);

    CHECK_THROWS_AS(PriceDistribution::gaussian(0.0, -1.0), ValidationError);
}

TEST_CASE("gaussian benchmark pools raw squares") {
    const std::vector<double> r = {3.0, -4.0};  // sum sq = 25, n-1 = 1
    const auto d = gaussian_benchmark(100.0, r);
    CHECK(d.gauss_mean() == 100.0);
    CHECK(d.gauss_sd() == doctest::Approx(5.0));

    // No centering: a pure bias shows up as spread.
    const std::vector<double> biased = {10.0, 10.0, 10.0};
    CHECK(gaussian_benchmark(0.0, biased).gauss_sd() ==
          doctest::Approx(std::sqrt(300.0 / 2.0)));

    const std::vector<double> one = {1.0};
    CHECK_THROWS_AS(gaussian_benchmark(0.0, one), InsufficientHistoryError);
    CHECK_THROWS_AS(gaussian_benchmark(0.0, std::span<const double>{}),
                    InsufficientHistoryError);
}

TEST_CASE("empirical distribution places uniform atoms at shifted residuals") {
    const std::vector<double> r = {-2.0, 0.0, 1.0, 5.0};
    const auto d = PriceDistribution::empirical(100.0, r);
    CHECK(d.kind() == DistKind::empirical);
    CHECK(d.cdf(97.9) == 0.0);
    CHECK(d.cdf(98.0) == doctest::Approx(0.25));
    CHECK(d.cdf(100.0) == doctest::Approx(0.5));
    CHECK(d.cdf(101.0) == doctest::Approx(0.75));
    CHECK(d.cdf(105.0) == 1.0);
    CHECK(d.cdf_left(100.0) == doctest::Approx(0.25));
    CHECK(d.quantile(0.25) == 98.0);   // smallest atom with F >= tau
    CHECK(d.quantile(0.26) == 100.0);
    CHECK(d.quantile(0.75) == 101.0);
    CHECK(d.quantile(0.76) == 105.0);
    CHECK(d.exceedance(100.0) == doctest::Approx(0.5));

    // Ties collapse correctly.
    const std::vector<double> tied = {1.0, 1.0, 2.0};
    const auto t = PriceDistribution::empirical(0.0, tied);
    CHECK(t.cdf(1.0) == doctest::Approx(2.0 / 3.0));
    CHECK(t.cdf_left(1.0) == 0.0);

    Rng rng(9);
    const auto xs = d.sample(100000, rng);
    double mean = 0.0;
    for (double x : xs) mean += x;
    CHECK(mean / double(xs.size()) == doctest::Approx(101.0).epsilon(0.001));

    CHECK_THROWS_AS(PriceDistribution::empirical(0.0, std::span<const double>{}),
                    ValidationError);
}

TEST_CASE("empirical distributions share one basis per history") {
    const std::vector<double> r = {-1.0, 2.0, 7.0};
    const auto basis = EmpiricalBasis::build(r);
    const auto a = empirical_benchmark(10.0, basis);
    const auto b = empirical_benchmark(-3.0, basis);
    CHECK(&a.basis() == &b.basis());
    CHECK(a.shift() == 10.0);
    CHECK(b.shift() == -3.0);
    CHECK(a.cdf(10.0 + 2.0) == b.cdf(-3.0 + 2.0));
    CHECK_THROWS_AS(empirical_benchmark(0.0, nullptr), InsufficientHistoryError);
}

TEST_CASE("empirical basis pair term matches brute force") {
    Rng rng(10);
    std::vector<double> r(200);
    for (double& x : r) x = 40.0 * (rng.uniform() - 0.5);
    const auto basis = EmpiricalBasis::build(r);
    // Oracle: O(n^2) double loop.
    double acc = 0.0;
    for (double a : r)
        for (double b : r) acc += std::fabs(a - b);
    CHECK(basis->mean_abs_pair ==
          doctest::Approx(acc / double(r.size() * r.size())).epsilon(1e-12));

    for (double c : {-30.0, -1.0, 0.0, 0.37, 25.0}) {
        double dev = 0.0;
        for (double x : r) dev += std::fabs(x - c);
        CHECK(basis->abs_dev_sum(c) == doctest::Approx(dev).epsilon(1e-12));
    }
}
