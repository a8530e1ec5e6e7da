#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "curvedress/curves.hpp"
#include "curvedress/dressing.hpp"
#include "curvedress/volmodel.hpp"

namespace curvedress {

/// Realized market outcome for one delivery hour.
struct ObservedRecord {
    double price;   // EUR/MWh
    double volume;  // MWh
};

struct BacktestDataset {
    CurveDataset curves;
    std::map<HourKey, ObservedRecord> observed;
    std::map<HourKey, double> forecasts;  // point price forecasts
};

/// `date,hour,price_eur,volume_mwh`. Duplicate (date, hour) rows — the DST
/// fall-back hour — are averaged into one record; a missing hour is simply
/// absent.
std::map<HourKey, ObservedRecord> load_observed(const std::filesystem::path& file);

/// `date,hour,p_hat_eur`, duplicates averaged as above.
std::map<HourKey, double> load_forecasts(const std::filesystem::path& file);

BacktestDataset load_backtest_dataset(const std::filesystem::path& curves_file,
                                      const std::filesystem::path& observed_file,
                                      const std::filesystem::path& forecasts_file,
                                      bool allow_price_out_of_range = false);

enum class ModelId { bidask = 0, gaussian = 1, empirical = 2 };

const char* model_name(ModelId m);
std::optional<ModelId> parse_model(std::string_view name);

/// Exceedance threshold reported in forecasts and scores (EUR/MWh).
inline constexpr double kExceedThreshold = 50.0;

/// Quantile levels written per forecast.
inline constexpr double kForecastTaus[] = {0.05, 0.10, 0.20, 0.50, 0.80, 0.90, 0.95};
inline constexpr int kNumForecastTaus = 7;

struct BacktestPlan {
    Date first_day;
    Date last_day;
    std::vector<ModelId> models = {ModelId::bidask, ModelId::gaussian, ModelId::empirical};
    std::vector<Date> exclude_scoring;  ///< dates still forecast but not scored
    ModelConfig config;
    std::uint64_t seed = 1;
    int curve_lookback_days = 7;  ///< how far back to search for a usable curve
};

/// Refuses plans without enough warm-up history before first_day: at least
/// config.knn residuals over at least config.tail_window_days distinct days.
/// The error message carries the shortfall. Throws ValidationError for
/// malformed plans and InsufficientHistoryError for thin history.
void validate_plan(const BacktestDataset& data, const BacktestPlan& plan);

struct ForecastRecord {
    Date date;
    int hour;
    ModelId model;
    double q[kNumForecastTaus];  ///< quantiles at kForecastTaus
    double exceed_prob;          ///< P(price > kExceedThreshold)
};

struct ScoreRecord {
    Date date;
    int hour;
    ModelId model;
    double crps;
    double qs10, qs90;  ///< pinball losses at 0.1 and 0.9
    double pit;
    double exceed_prob;
    bool exceeded;  ///< realized price > kExceedThreshold
};

struct AggregateRow {
    ModelId model;
    long n;
    double crps, qs10, qs90;  ///< mean scores
};

struct HourAggregateRow {
    ModelId model;
    int hour;
    long n;
    double crps, qs10, qs90;
};

struct BacktestResult {
    BacktestPlan plan;  ///< echo of the effective plan
    std::vector<ForecastRecord> forecasts;
    std::vector<ScoreRecord> scores;
    std::vector<SkippedRecord> skipped;
    std::vector<AggregateRow> aggregates;
};

/// Rolls day by day over [first_day, last_day]. For each day, residuals and
/// price residuals from all strictly earlier days are (re)fitted; each hour
/// is dressed on the most recent prior-day ask curve (up to
/// curve_lookback_days back) and scored against the realized price. Cells
/// with a missing forecast, curve, realized price, or insufficient per-hour
/// history are skipped with a reason, never silently. PIT draws use a
/// per-(day, hour, model) forked RNG stream, so results are independent of
/// evaluation order.
BacktestResult run_backtest(const BacktestDataset& data, const BacktestPlan& plan);

std::vector<AggregateRow> aggregate_scores(std::span<const ScoreRecord> scores);
std::vector<HourAggregateRow> aggregate_scores_by_hour(std::span<const ScoreRecord> scores);

enum class Metric { crps, qs10, qs90 };
std::optional<Metric> parse_metric(std::string_view name);
const char* metric_name(Metric m);
double metric_of(const ScoreRecord& rec, Metric m);

/// Scores of two models joined on (date, hour), in matching order.
struct PairedScores {
    std::vector<double> a, b;
};
PairedScores pair_scores(std::span<const ScoreRecord> scores, ModelId model_a, ModelId model_b,
                         Metric metric);

/// Writes forecasts.csv, scores.csv, aggregate.csv, aggregate_by_hour.csv,
/// pit.csv, reliability.csv (with and without the > 0.1 probability filter),
/// and skipped.csv under out_dir.
void write_backtest_outputs(const BacktestResult& result, const std::filesystem::path& out_dir);

/// Readers for the pinned output schemas (used by the permutation-test
/// command and the tests).
std::vector<ScoreRecord> load_scores(const std::filesystem::path& file);
std::vector<ForecastRecord> load_forecast_records(const std::filesystem::path& file);

}  // namespace curvedress
