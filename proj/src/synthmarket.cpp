#include "curvedress/synthmarket.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "curvedress/csv.hpp"
#include "curvedress/rng.hpp"
#include "kvconfig.hpp"

namespace curvedress {

namespace {

// Sub-stream tags for Rng::fork so every (day, hour) quantity has its own
// independent stream regardless of generation order.
constexpr std::uint64_t kStreamJitter = 1;
constexpr std::uint64_t kStreamError = 2;
constexpr std::uint64_t kStreamDemandAr = 3;
constexpr std::uint64_t kStreamSpike = 4;

StepCurve make_ask(const SynthConfig& cfg, double jitter) {
    const double step = cfg.volume_range / cfg.curve_steps;
    const double flat_top = cfg.flat_price + cfg.flat_rise;
    const double tail_scale = (cfg.price_top - flat_top) / std::expm1(cfg.tail_exponent);
    std::vector<CurvePoint> pts(std::size_t(cfg.curve_steps) + 1);
    for (int j = 0; j <= cfg.curve_steps; ++j) {
        const double f = double(j) / cfg.curve_steps;
        double price;
        if (f <= cfg.kink_frac) {
            price = cfg.flat_price + cfg.flat_rise * (f / cfg.kink_frac);
        } else {
            const double u = (f - cfg.kink_frac) / (1.0 - cfg.kink_frac);
            price = flat_top + tail_scale * std::expm1(cfg.tail_exponent * u);
        }
        pts[std::size_t(j)] = {cfg.volume_start + jitter + j * step, price};
    }
    return StepCurve(Side::ask, std::move(pts));
}

}  // namespace

void SynthConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ValidationError("synth config: " + msg); };
    if (n_days < 1) fail("n_days must be at least 1");
    if (curve_steps < 2) fail("curve_steps must be at least 2");
    if (!(volume_range > 0)) fail("volume_range must be positive");
    if (!std::isfinite(volume_start)) fail("volume_start must be finite");
    if (!(kink_frac > 0 && kink_frac < 1)) fail("kink_frac must lie in (0, 1)");
    if (!(flat_price >= kPriceFloor)) fail("flat_price below the price floor");
    if (!(flat_rise >= 0)) fail("flat_rise must be non-negative");
    if (!(tail_exponent > 0)) fail("tail_exponent must be positive");
    if (!(price_top > flat_price + flat_rise)) fail("price_top must exceed the flat region");
    if (!(price_top <= kPriceCap)) fail("price_top above the price cap");
    if (!(curve_jitter >= 0)) fail("curve_jitter must be non-negative");
    if (!(demand_base > 0 && demand_base < 1)) fail("demand_base must lie in (0, 1)");
    if (!(daily_amp >= 0 && weekly_amp >= 0 && annual_amp >= 0))
        fail("sinusoid amplitudes must be non-negative");
    if (!(ar1_coeff > -1 && ar1_coeff < 1)) fail("ar1_coeff must lie in (-1, 1)");
    if (!(ar1_sd >= 0)) fail("ar1_sd must be non-negative");
    if (!(spike_prob >= 0 && spike_prob <= 1)) fail("spike_prob must lie in [0, 1]");
    if (!(spike_mag >= 0)) fail("spike_mag must be non-negative");
    if (!(err_sigma_lo > 0)) fail("err_sigma_lo must be positive");
    if (!(err_sigma_hi >= err_sigma_lo)) fail("err_sigma_hi must be >= err_sigma_lo");
    if (!(err_sigma_scale > 0)) fail("err_sigma_scale must be positive");
    if (!(err_mu_kink >= 0)) fail("err_mu_kink must be non-negative");
    if (!(err_mu_scale > 0)) fail("err_mu_scale must be positive");
    if (!(m > 0)) fail("m must be positive");
}

TruthMoments truth_moments(const SynthConfig& cfg, double delta_plus) {
    if (!(delta_plus >= 0)) {
        throw ValidationError("delta_plus must be non-negative, got " +
                              std::to_string(delta_plus));
    }
    const double mu = -cfg.err_mu_kink * std::exp(-delta_plus / cfg.err_mu_scale);
    const double sigma = cfg.err_sigma_lo + (cfg.err_sigma_hi - cfg.err_sigma_lo) *
                                                (-std::expm1(-delta_plus / cfg.err_sigma_scale));
    return {mu, sigma};
}

SynthDataset generate(const SynthConfig& cfg) {
    cfg.validate();
    SynthDataset ds;
    ds.config = cfg;
    ds.hours.reserve(std::size_t(cfg.n_days) * 24);
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    const double stationary =
        cfg.ar1_sd / std::sqrt(1.0 - cfg.ar1_coeff * cfg.ar1_coeff);

    for (int d = 0; d < cfg.n_days; ++d) {
        const Date date = cfg.start_date + d;
        const auto du = std::uint64_t(d);
        Rng ar_rng = Rng::fork(cfg.seed, {kStreamDemandAr, du});
        double ar = stationary * ar_rng.normal();
        for (int h = 1; h <= 24; ++h) {
            const auto hu = std::uint64_t(h);
            if (h > 1) ar = cfg.ar1_coeff * ar + cfg.ar1_sd * ar_rng.normal();

            const double jitter =
                cfg.curve_jitter * Rng::fork(cfg.seed, {kStreamJitter, du, hu}).normal();
            StepCurve ask = make_ask(cfg, jitter);

            Rng spike_rng = Rng::fork(cfg.seed, {kStreamSpike, du, hu});
            double spike = 0.0;
            if (spike_rng.uniform() < cfg.spike_prob) {
                spike = cfg.spike_mag * spike_rng.uniform();
            }
            double frac = cfg.demand_base + cfg.daily_amp * std::sin(kTwoPi * (h - 1) / 24.0) +
                          cfg.weekly_amp * std::sin(kTwoPi * date.weekday() / 7.0) +
                          cfg.annual_amp * std::sin(kTwoPi * (date.day_of_year() - 1) / 365.0) +
                          ar + spike;
            frac = std::clamp(frac, 0.03, 0.93);
            const double demand = cfg.volume_start + frac * cfg.volume_range;

            const double p_hat = ask.eval(demand);
            const double v_hat = ask.inverse(p_hat).volume;
            const auto feat = delta_features(ask, p_hat, cfg.m);
            const auto tm = truth_moments(cfg, feat.delta_plus);
            Rng err_rng = Rng::fork(cfg.seed, {kStreamError, du, hu});
            const double margin = 1e-3 * cfg.volume_range / cfg.curve_steps;
            const double v_true =
                std::clamp(v_hat - (tm.mu + tm.sigma * err_rng.normal()),
                           ask.volume_min() + margin, ask.volume_max() - margin);
            const double e = v_hat - v_true;
            const double p_true = ask.eval(v_true);

            // A bid that stays at the cap until the true volume and then drops
            // onto the ask level there, so the curves cross exactly at v_true.
            StepCurve bid(Side::bid,
                          {{ask.volume_min(), kPriceCap},
                           {v_true, p_true},
                           {ask.volume_max(), std::max(kPriceFloor, p_true - 25.0)}});
            const Settlement st = settle(bid, ask);

            ds.hours.push_back({date, h, std::move(bid), std::move(ask), st.price, st.volume,
                                p_hat, v_hat, e, feat.delta_plus});
        }
    }
    return ds;
}

void write_synth_csvs(const SynthDataset& ds, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    csv::Writer curves(out_dir / "curves.csv", {"date", "hour", "side", "volume_mwh", "price_eur"});
    csv::Writer observed(out_dir / "observed.csv", {"date", "hour", "price_eur", "volume_mwh"});
    csv::Writer forecasts(out_dir / "forecasts.csv", {"date", "hour", "p_hat_eur"});
    for (const auto& hr : ds.hours) {
        for (const auto& pt : hr.bid.points()) {
            curves.field(hr.date).field(hr.hour).field("BID").field(pt.volume).field(pt.price);
            curves.end_row();
        }
        for (const auto& pt : hr.ask.points()) {
            curves.field(hr.date).field(hr.hour).field("ASK").field(pt.volume).field(pt.price);
            curves.end_row();
        }
        observed.field(hr.date).field(hr.hour).field(hr.price).field(hr.volume);
        observed.end_row();
        forecasts.field(hr.date).field(hr.hour).field(hr.p_hat);
        forecasts.end_row();
    }
    curves.close();
    observed.close();
    forecasts.close();
}

SynthConfig synth_config_from_kv(const KvMap& kv, const std::string& context) {
    SynthConfig cfg;
    const std::string& f = context;
    for (const auto& [key, val] : kv) {
        if (key == "n_days") cfg.n_days = kvconfig::to_int(f, key, val);
        else if (key == "seed") cfg.seed = kvconfig::to_u64(f, key, val);
        else if (key == "start_date") {
            const auto parsed = Date::parse(val);
            if (!parsed)
                throw ValidationError(f + ": key start_date: expected YYYY-MM-DD, got \"" + val +
                                      "\"");
            cfg.start_date = *parsed;
        } else if (key == "curve_steps") cfg.curve_steps = kvconfig::to_int(f, key, val);
        else if (key == "volume_start") cfg.volume_start = kvconfig::to_double(f, key, val);
        else if (key == "volume_range") cfg.volume_range = kvconfig::to_double(f, key, val);
        else if (key == "kink_frac") cfg.kink_frac = kvconfig::to_double(f, key, val);
        else if (key == "flat_price") cfg.flat_price = kvconfig::to_double(f, key, val);
        else if (key == "flat_rise") cfg.flat_rise = kvconfig::to_double(f, key, val);
        else if (key == "tail_exponent") cfg.tail_exponent = kvconfig::to_double(f, key, val);
        else if (key == "price_top") cfg.price_top = kvconfig::to_double(f, key, val);
        else if (key == "curve_jitter") cfg.curve_jitter = kvconfig::to_double(f, key, val);
        else if (key == "demand_base") cfg.demand_base = kvconfig::to_double(f, key, val);
        else if (key == "daily_amp") cfg.daily_amp = kvconfig::to_double(f, key, val);
        else if (key == "weekly_amp") cfg.weekly_amp = kvconfig::to_double(f, key, val);
        else if (key == "annual_amp") cfg.annual_amp = kvconfig::to_double(f, key, val);
        else if (key == "ar1_coeff") cfg.ar1_coeff = kvconfig::to_double(f, key, val);
        else if (key == "ar1_sd") cfg.ar1_sd = kvconfig::to_double(f, key, val);
        else if (key == "spike_prob") cfg.spike_prob = kvconfig::to_double(f, key, val);
        else if (key == "spike_mag") cfg.spike_mag = kvconfig::to_double(f, key, val);
        else if (key == "err_sigma_lo") cfg.err_sigma_lo = kvconfig::to_double(f, key, val);
        else if (key == "err_sigma_hi") cfg.err_sigma_hi = kvconfig::to_double(f, key, val);
        else if (key == "err_sigma_scale") cfg.err_sigma_scale = kvconfig::to_double(f, key, val);
        else if (key == "err_mu_kink") cfg.err_mu_kink = kvconfig::to_double(f, key, val);
        else if (key == "err_mu_scale") cfg.err_mu_scale = kvconfig::to_double(f, key, val);
        else if (key == "m") cfg.m = kvconfig::to_double(f, key, val);
        else throw ValidationError(f + ": unknown synth config key " + key);
    }
    cfg.validate();
    return cfg;
}

SynthConfig load_synth_config(const std::filesystem::path& file) {
    return synth_config_from_kv(kvconfig::parse(file), file.string());
}

KvMap to_kv(const SynthConfig& cfg) {
    return {{"n_days", std::to_string(cfg.n_days)},
            {"seed", std::to_string(cfg.seed)},
            {"start_date", cfg.start_date.to_string()},
            {"curve_steps", std::to_string(cfg.curve_steps)},
            {"volume_start", csv::format_double(cfg.volume_start)},
            {"volume_range", csv::format_double(cfg.volume_range)},
            {"kink_frac", csv::format_double(cfg.kink_frac)},
            {"flat_price", csv::format_double(cfg.flat_price)},
            {"flat_rise", csv::format_double(cfg.flat_rise)},
            {"tail_exponent", csv::format_double(cfg.tail_exponent)},
            {"price_top", csv::format_double(cfg.price_top)},
            {"curve_jitter", csv::format_double(cfg.curve_jitter)},
            {"demand_base", csv::format_double(cfg.demand_base)},
            {"daily_amp", csv::format_double(cfg.daily_amp)},
            {"weekly_amp", csv::format_double(cfg.weekly_amp)},
            {"annual_amp", csv::format_double(cfg.annual_amp)},
            {"ar1_coeff", csv::format_double(cfg.ar1_coeff)},
            {"ar1_sd", csv::format_double(cfg.ar1_sd)},
            {"spike_prob", csv::format_double(cfg.spike_prob)},
            {"spike_mag", csv::format_double(cfg.spike_mag)},
            {"err_sigma_lo", csv::format_double(cfg.err_sigma_lo)},
            {"err_sigma_hi", csv::format_double(cfg.err_sigma_hi)},
            {"err_sigma_scale", csv::format_double(cfg.err_sigma_scale)},
            {"err_mu_kink", csv::format_double(cfg.err_mu_kink)},
            {"err_mu_scale", csv::format_double(cfg.err_mu_scale)},
            {"m", csv::format_double(cfg.m)}};
}

void save_synth_config(const SynthConfig& cfg, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw ValidationError("cannot write config " + file.string());
    out << "n_days = " << cfg.n_days << "\n"
        << "seed = " << cfg.seed << "\n"
        << "start_date = " << cfg.start_date.to_string() << "\n"
        << "curve_steps = " << cfg.curve_steps << "\n"
        << "volume_start = " << csv::format_double(cfg.volume_start) << "\n"
        << "volume_range = " << csv::format_double(cfg.volume_range) << "\n"
        << "kink_frac = " << csv::format_double(cfg.kink_frac) << "\n"
        << "flat_price = " << csv::format_double(cfg.flat_price) << "\n"
        << "flat_rise = " << csv::format_double(cfg.flat_rise) << "\n"
        << "tail_exponent = " << csv::format_double(cfg.tail_exponent) << "\n"
        << "price_top = " << csv::format_double(cfg.price_top) << "\n"
        << "curve_jitter = " << csv::format_double(cfg.curve_jitter) << "\n"
        << "demand_base = " << csv::format_double(cfg.demand_base) << "\n"
        << "daily_amp = " << csv::format_double(cfg.daily_amp) << "\n"
        << "weekly_amp = " << csv::format_double(cfg.weekly_amp) << "\n"
        << "annual_amp = " << csv::format_double(cfg.annual_amp) << "\n"
        << "ar1_coeff = " << csv::format_double(cfg.ar1_coeff) << "\n"
        << "ar1_sd = " << csv::format_double(cfg.ar1_sd) << "\n"
        << "spike_prob = " << csv::format_double(cfg.spike_prob) << "\n"
        << "spike_mag = " << csv::format_double(cfg.spike_mag) << "\n"
        << "err_sigma_lo = " << csv::format_double(cfg.err_sigma_lo) << "\n"
        << "err_sigma_hi = " << csv::format_double(cfg.err_sigma_hi) << "\n"
        << "err_sigma_scale = " << csv::format_double(cfg.err_sigma_scale) << "\n"
        << "err_mu_kink = " << csv::format_double(cfg.err_mu_kink) << "\n"
        << "err_mu_scale = " << csv::format_double(cfg.err_mu_scale) << "\n"
        << "m = " << csv::format_double(cfg.m) << "\n";
    if (!out.flush()) throw ValidationError("write failure on " + file.string());
}

}  // namespace curvedress
