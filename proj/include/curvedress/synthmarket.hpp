#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "curvedress/curves.hpp"
#include "curvedress/date.hpp"
#include "curvedress/kvmap.hpp"

namespace curvedress {

/// Parameters of the synthetic day-ahead market. The supply curve is mostly
/// flat with a steep exponential tail; demand follows daily/weekly/annual
/// sinusoids plus a per-day AR(1) term and occasional spikes that push the
/// forecast into the steep region. Volume-space forecast errors are Gaussian
/// with moments tied to the kink feature delta_plus (see truth_moments).
struct SynthConfig {
    int n_days = 600;
    std::uint64_t seed = 86028157;
    Date start_date = Date::from_ymd(2016, 1, 1);

    // supply curve
    int curve_steps = 200;          ///< steps per curve (steps + 1 breakpoints)
    double volume_start = 8000.0;   ///< MWh, domain start
    double volume_range = 30000.0;  ///< MWh, domain width
    double kink_frac = 0.72;        ///< fraction of the range before the tail
    double flat_price = 24.0;       ///< EUR at the domain start
    double flat_rise = 10.0;        ///< EUR gained across the flat region
    double tail_exponent = 6.5;     ///< steepness of the exponential tail
    double price_top = 2990.0;      ///< EUR at the domain end
    double curve_jitter = 15.0;     ///< MWh sd of the day-to-day volume shift

    // demand (volumes as fractions of volume_range above volume_start)
    double demand_base = 0.40;
    double daily_amp = 0.06;
    double weekly_amp = 0.03;
    double annual_amp = 0.08;
    double ar1_coeff = 0.70;   ///< hour-to-hour persistence within a day
    double ar1_sd = 0.02;      ///< innovation sd
    double spike_prob = 0.06;  ///< per-hour probability of a demand spike
    double spike_mag = 0.42;   ///< max spike size; the draw is uniform in [0, mag)

    // forecast-error process, MWh moments as functions of delta_plus
    double err_sigma_lo = 210.0;     ///< sd as delta_plus -> 0
    double err_sigma_hi = 420.0;     ///< asymptotic sd at large delta_plus
    double err_sigma_scale = 2200.0; ///< exponential scale of the sd rise
    double err_mu_kink = 0.0;        ///< magnitude of the negative kink-regime mean
    double err_mu_scale = 2200.0;    ///< decay scale of the mean toward 0
    double m = 50.0;                 ///< EUR probe used for the true delta_plus

    void validate() const;  // throws ValidationError
};

/// key = value file with the SynthConfig field names; absent keys keep their
/// defaults, unknown keys are errors.
SynthConfig load_synth_config(const std::filesystem::path& file);
void save_synth_config(const SynthConfig& cfg, const std::filesystem::path& file);

/// Round-trip between the config and its key -> value form (exact decimal
/// rendering). `context` names the source in error messages.
KvMap to_kv(const SynthConfig& cfg);
SynthConfig synth_config_from_kv(const KvMap& kv, const std::string& context);

/// The true volume-error law at a given delta_plus:
///   mu(d)    = -err_mu_kink * exp(-d / err_mu_scale)
///   sigma(d) = err_sigma_lo + (err_sigma_hi - err_sigma_lo) * (1 - exp(-d / err_sigma_scale))
struct TruthMoments {
    double mu;
    double sigma;
};
TruthMoments truth_moments(const SynthConfig& cfg, double delta_plus);

/// One generated delivery hour, curves plus settlement and ground truth.
struct SynthHour {
    Date date;
    int hour;  // 1..24
    StepCurve bid;
    StepCurve ask;
    double price;   ///< settled price, from curves::settle
    double volume;  ///< settled volume
    double p_hat;   ///< point price forecast
    // ground truth, for estimator and calibration tests
    double v_hat;       ///< inverse of the same-day ask at p_hat
    double e;           ///< volume error v_hat - volume actually drawn
    double delta_plus;  ///< kink feature of the same-day ask at p_hat
};

struct SynthDataset {
    SynthConfig config;
    std::vector<SynthHour> hours;  // (date, hour) ascending
};

/// Generates the market. The point forecast is the same-day ask curve read at
/// a noisy demand volume; the true volume deviates from the implied v_hat by
/// a Gaussian error with the truth_moments of the same-day delta_plus, and
/// the bid curve is built to cross the ask exactly at the true volume, so the
/// stored settlement is curves::settle output. Each (day, hour) uses forked
/// RNG streams, so days are independent of generation order.
SynthDataset generate(const SynthConfig& cfg);

/// Writes curves.csv, observed.csv, and forecasts.csv under out_dir using the
/// pinned schemas.
void write_synth_csvs(const SynthDataset& ds, const std::filesystem::path& out_dir);

}  // namespace curvedress
