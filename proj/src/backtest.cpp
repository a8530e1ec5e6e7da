#include "curvedress/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "curvedress/csv.hpp"
#include "curvedress/kernels.hpp"
#include "curvedress/verification.hpp"

namespace curvedress {

namespace {

constexpr std::uint64_t kStreamPit = 10;

void check_hour(csv::Row& row, int hour) {
    if (hour < 1 || hour > 24) row.fail("hour must be in 1..24, got " + std::to_string(hour));
}

}  // namespace

std::map<HourKey, ObservedRecord> load_observed(const std::filesystem::path& file) {
    csv::Reader reader(file, {"date", "hour", "price_eur", "volume_mwh"});
    struct Acc {
        double price = 0, volume = 0;
        int n = 0;
    };
    std::map<HourKey, Acc> acc;
    csv::Row row({}, nullptr, 0);
    while (reader.next(row)) {
        const Date date = row.date(0);
        const int hour = row.integer(1);
        check_hour(row, hour);
        auto& a = acc[{date, hour}];
        a.price += row.num(2);
        a.volume += row.num(3);
        ++a.n;
    }
    std::map<HourKey, ObservedRecord> out;
    for (const auto& [key, a] : acc) {
        out.emplace(key, ObservedRecord{a.price / a.n, a.volume / a.n});
    }
    return out;
}

std::map<HourKey, double> load_forecasts(const std::filesystem::path& file) {
    csv::Reader reader(file, {"date", "hour", "p_hat_eur"});
    struct Acc {
        double p = 0;
        int n = 0;
    };
    std::map<HourKey, Acc> acc;
    csv::Row row({}, nullptr, 0);
    while (reader.next(row)) {
        const Date date = row.date(0);
        const int hour = row.integer(1);
        check_hour(row, hour);
        auto& a = acc[{date, hour}];
        a.p += row.num(2);
        ++a.n;
    }
    std::map<HourKey, double> out;
    for (const auto& [key, a] : acc) out.emplace(key, a.p / a.n);
    return out;
}

BacktestDataset load_backtest_dataset(const std::filesystem::path& curves_file,
                                      const std::filesystem::path& observed_file,
                                      const std::filesystem::path& forecasts_file,
                                      bool allow_price_out_of_range) {
    BacktestDataset ds;
    ds.curves = load_curves(curves_file, allow_price_out_of_range);
    ds.observed = load_observed(observed_file);
    ds.forecasts = load_forecasts(forecasts_file);
    return ds;
}

const char* model_name(ModelId m) {
    switch (m) {
        case ModelId::bidask: return "bidask";
        case ModelId::gaussian: return "gaussian";
        case ModelId::empirical: return "empirical";
    }
    return "?";
}

std::optional<ModelId> parse_model(std::string_view name) {
    if (name == "bidask") return ModelId::bidask;
    if (name == "gaussian") return ModelId::gaussian;
    if (name == "empirical") return ModelId::empirical;
    return std::nullopt;
}

namespace {

struct WarmupCount {
    std::size_t residuals = 0;
    std::size_t days = 0;
};

// Volume residuals computable strictly before `first` (curve + volume +
// forecast all present), and the distinct days carrying at least one.
WarmupCount warmup_history(const BacktestDataset& data, Date first) {
    WarmupCount w;
    Date last_counted{};
    bool any = false;
    for (const auto& [key, hc] : data.curves) {
        if (!(key.date < first)) break;  // map is ordered by (date, hour)
        if (!hc.ask) continue;
        if (!data.observed.contains(key) || !data.forecasts.contains(key)) continue;
        ++w.residuals;
        if (!any || key.date != last_counted) {
            ++w.days;
            last_counted = key.date;
            any = true;
        }
    }
    return w;
}

}  // namespace

void validate_plan(const BacktestDataset& data, const BacktestPlan& plan) {
    plan.config.validate();
    if (plan.last_day < plan.first_day) {
        throw ValidationError("backtest plan: last day " + plan.last_day.to_string() +
                              " precedes first day " + plan.first_day.to_string());
    }
    if (plan.models.empty()) throw ValidationError("backtest plan: no models selected");
    if (plan.curve_lookback_days < 1) {
        throw ValidationError("backtest plan: curve_lookback_days must be at least 1");
    }
    const auto w = warmup_history(data, plan.first_day);
    const auto need_n = std::size_t(plan.config.knn);
    const auto need_d = std::size_t(plan.config.tail_window_days);
    if (w.residuals < need_n || w.days < need_d) {
        throw InsufficientHistoryError(
            "backtest warm-up before " + plan.first_day.to_string() + ": " +
            std::to_string(w.residuals) + " residual(s) over " + std::to_string(w.days) +
            " day(s); need at least " + std::to_string(need_n) + " residuals and " +
            std::to_string(need_d) + " days");
    }
}

namespace {

const StepCurve* find_prior_ask(const BacktestDataset& data, Date day, int hour, int lookback) {
    for (int back = 1; back <= lookback; ++back) {
        const auto it = data.curves.find({day - back, hour});
        if (it != data.curves.end() && it->second.ask) return &*it->second.ask;
    }
    return nullptr;
}

}  // namespace

BacktestResult run_backtest(const BacktestDataset& data, const BacktestPlan& plan) {
    validate_plan(data, plan);
    BacktestResult result;
    result.plan = plan;

    const std::set<Date> excluded(plan.exclude_scoring.begin(), plan.exclude_scoring.end());

    // Earliest date appearing anywhere; history accumulation starts there.
    Date cursor = plan.first_day;
    bool have_cursor = false;
    auto consider = [&](Date d) {
        if (!have_cursor || d < cursor) {
            cursor = d;
            have_cursor = true;
        }
    };
    if (!data.curves.empty()) consider(data.curves.begin()->first.date);
    if (!data.observed.empty()) consider(data.observed.begin()->first.date);
    if (!data.forecasts.empty()) consider(data.forecasts.begin()->first.date);

    ResidualTable table;
    std::vector<double> price_residuals;  // r = p_hat - p, (date, hour) order

    auto absorb_history_until = [&](Date day) {
        for (; cursor < day; cursor = cursor + 1) {
            for (int h = 1; h <= 24; ++h) {
                const HourKey key{cursor, h};
                const auto fc = data.forecasts.find(key);
                if (fc == data.forecasts.end()) continue;
                const auto ob = data.observed.find(key);
                if (ob == data.observed.end()) continue;
                price_residuals.push_back(fc->second - ob->second.price);
                const auto cv = data.curves.find(key);
                if (cv == data.curves.end() || !cv->second.ask) continue;
                const StepCurve& ask = *cv->second.ask;
                const double v_hat = ask.inverse(fc->second).volume;
                const auto feat = delta_features(ask, fc->second, plan.config.m);
                table.add({cursor, h, v_hat - ob->second.volume, feat.delta_plus, fc->second});
            }
        }
    };

    const bool wants_gaussian =
        std::find(plan.models.begin(), plan.models.end(), ModelId::gaussian) != plan.models.end();
    const bool wants_empirical =
        std::find(plan.models.begin(), plan.models.end(), ModelId::empirical) != plan.models.end();

    for (Date day = plan.first_day; !(plan.last_day < day); day = day + 1) {
        absorb_history_until(day);

        // Benchmark state is shared by every hour of the day.
        std::shared_ptr<const EmpiricalBasis> basis;
        if (wants_empirical && !price_residuals.empty()) basis = EmpiricalBasis::build(price_residuals);
        double gauss_sd = -1.0;
        if (wants_gaussian && price_residuals.size() >= 2) {
            gauss_sd = std::sqrt(kernels::sum_sq_dev(price_residuals, 0.0) /
                                 double(price_residuals.size() - 1));
        }

        for (int h = 1; h <= 24; ++h) {
            const HourKey key{day, h};
            const auto fc = data.forecasts.find(key);
            if (fc == data.forecasts.end()) {
                result.skipped.push_back({day, h, "no point forecast"});
                continue;
            }
            const double p_hat = fc->second;
            const StepCurve* ask = find_prior_ask(data, day, h, plan.curve_lookback_days);
            if (ask == nullptr) {
                result.skipped.push_back(
                    {day, h,
                     "no prior ask curve within " + std::to_string(plan.curve_lookback_days) +
                         " day(s)"});
                continue;
            }

            // Build every requested distribution before emitting anything, so
            // a skip leaves no partial rows and models stay cell-aligned.
            std::vector<std::pair<ModelId, PriceDistribution>> dists;
            try {
                for (ModelId model : plan.models) {
                    switch (model) {
                        case ModelId::bidask: {
                            const auto feat = delta_features(*ask, p_hat, plan.config.m);
                            const auto err =
                                table.error_distribution(plan.config, day, h, feat.delta_plus);
                            dists.emplace_back(model,
                                               PriceDistribution::pushforward(*ask, p_hat, err));
                            break;
                        }
                        case ModelId::gaussian:
                            if (gauss_sd < 0.0) {
                                throw InsufficientHistoryError(
                                    "gaussian benchmark needs at least 2 price residuals");
                            }
                            dists.emplace_back(model, PriceDistribution::gaussian(p_hat, gauss_sd));
                            break;
                        case ModelId::empirical:
                            dists.emplace_back(model, empirical_benchmark(p_hat, basis));
                            break;
                    }
                }
            } catch (const InsufficientHistoryError& err) {
                result.skipped.push_back({day, h, err.what()});
                continue;
            }

            const auto ob = data.observed.find(key);
            const bool score_cell = ob != data.observed.end() && !excluded.contains(day);
            if (ob == data.observed.end()) {
                result.skipped.push_back({day, h, "no realized price; forecast only"});
            }

            for (const auto& [model, dist] : dists) {
                ForecastRecord frec{day, h, model, {}, dist.exceedance(kExceedThreshold)};
                for (int i = 0; i < kNumForecastTaus; ++i) {
                    frec.q[i] = dist.quantile(kForecastTaus[i]);
                }
                result.forecasts.push_back(frec);

                if (!score_cell) continue;
                const double p = ob->second.price;
                Rng rng = Rng::fork(plan.seed,
                                    {kStreamPit, std::uint64_t(std::int64_t(day.day_index())),
                                     std::uint64_t(h), std::uint64_t(model)});
                result.scores.push_back({day, h, model, crps(dist, p),
                                         quantile_score(dist, p, 0.1), quantile_score(dist, p, 0.9),
                                         pit(dist, p, rng), frec.exceed_prob,
                                         p > kExceedThreshold});
            }
        }
    }

    result.aggregates = aggregate_scores(result.scores);
    return result;
}

namespace {

struct ScoreBucket {
    std::vector<double> crps, qs10, qs90;
};

AggregateRow bucket_to_row(ModelId model, const ScoreBucket& b) {
    const auto n = long(b.crps.size());
    AggregateRow row{model, n, 0, 0, 0};
    if (n > 0) {
        row.crps = kernels::sum(b.crps) / double(n);
        row.qs10 = kernels::sum(b.qs10) / double(n);
        row.qs90 = kernels::sum(b.qs90) / double(n);
    }
    return row;
}

}  // namespace

std::vector<AggregateRow> aggregate_scores(std::span<const ScoreRecord> scores) {
    std::map<ModelId, ScoreBucket> buckets;
    for (const auto& s : scores) {
        auto& b = buckets[s.model];
        b.crps.push_back(s.crps);
        b.qs10.push_back(s.qs10);
        b.qs90.push_back(s.qs90);
    }
    std::vector<AggregateRow> out;
    out.reserve(buckets.size());
    for (const auto& [model, b] : buckets) out.push_back(bucket_to_row(model, b));
    return out;
}

std::vector<HourAggregateRow> aggregate_scores_by_hour(std::span<const ScoreRecord> scores) {
    std::map<std::pair<ModelId, int>, ScoreBucket> buckets;
    for (const auto& s : scores) {
        auto& b = buckets[{s.model, s.hour}];
        b.crps.push_back(s.crps);
        b.qs10.push_back(s.qs10);
        b.qs90.push_back(s.qs90);
    }
    std::vector<HourAggregateRow> out;
    out.reserve(buckets.size());
    for (const auto& [key, b] : buckets) {
        const auto row = bucket_to_row(key.first, b);
        out.push_back({key.first, key.second, row.n, row.crps, row.qs10, row.qs90});
    }
    return out;
}

std::optional<Metric> parse_metric(std::string_view name) {
    if (name == "crps") return Metric::crps;
    if (name == "qs10") return Metric::qs10;
    if (name == "qs90") return Metric::qs90;
    return std::nullopt;
}

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::crps: return "crps";
        case Metric::qs10: return "qs10";
        case Metric::qs90: return "qs90";
    }
    return "?";
}

double metric_of(const ScoreRecord& rec, Metric m) {
    switch (m) {
        case Metric::crps: return rec.crps;
        case Metric::qs10: return rec.qs10;
        case Metric::qs90: return rec.qs90;
    }
    return 0.0;
}

PairedScores pair_scores(std::span<const ScoreRecord> scores, ModelId model_a, ModelId model_b,
                         Metric metric) {
    std::map<HourKey, double> a_by_key;
    for (const auto& s : scores) {
        if (s.model == model_a) a_by_key.emplace(HourKey{s.date, s.hour}, metric_of(s, metric));
    }
    PairedScores out;
    for (const auto& s : scores) {
        if (s.model != model_b) continue;
        const auto it = a_by_key.find({s.date, s.hour});
        if (it == a_by_key.end()) continue;
        out.a.push_back(it->second);
        out.b.push_back(metric_of(s, metric));
    }
    return out;
}

void write_backtest_outputs(const BacktestResult& result, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    csv::Writer fw(out_dir / "forecasts.csv", {"date", "hour", "model", "q05", "q10", "q20", "q50",
                                               "q80", "q90", "q95", "exceed_50"});
    for (const auto& f : result.forecasts) {
        fw.field(f.date).field(f.hour).field(model_name(f.model));
        for (double q : f.q) fw.field(q);
        fw.field(f.exceed_prob);
        fw.end_row();
    }
    fw.close();

    csv::Writer sw(out_dir / "scores.csv", {"date", "hour", "model", "crps", "qs10", "qs90", "pit",
                                            "exceed_prob", "exceeded"});
    for (const auto& s : result.scores) {
        sw.field(s.date).field(s.hour).field(model_name(s.model));
        sw.field(s.crps).field(s.qs10).field(s.qs90).field(s.pit).field(s.exceed_prob);
        sw.field(s.exceeded ? 1 : 0);
        sw.end_row();
    }
    sw.close();

    csv::Writer aw(out_dir / "aggregate.csv", {"model", "n", "mean_crps", "mean_qs10", "mean_qs90"});
    for (const auto& a : result.aggregates) {
        aw.field(model_name(a.model)).field(a.n).field(a.crps).field(a.qs10).field(a.qs90);
        aw.end_row();
    }
    aw.close();

    csv::Writer hw(out_dir / "aggregate_by_hour.csv",
                   {"model", "hour", "n", "mean_crps", "mean_qs10", "mean_qs90"});
    for (const auto& a : aggregate_scores_by_hour(result.scores)) {
        hw.field(model_name(a.model)).field(a.hour).field(a.n);
        hw.field(a.crps).field(a.qs10).field(a.qs90);
        hw.end_row();
    }
    hw.close();

    constexpr int kBins = 10;
    csv::Writer pw(out_dir / "pit.csv", {"model", "bin", "lo", "hi", "count"});
    csv::Writer rw(out_dir / "reliability.csv",
                   {"model", "filter", "bin", "lo", "hi", "count", "mean_prob", "freq"});
    for (const auto& agg : result.aggregates) {
        const ModelId model = agg.model;
        std::vector<double> pits;
        std::vector<ExceedanceRecord> recs;
        for (const auto& s : result.scores) {
            if (s.model != model) continue;
            pits.push_back(s.pit);
            recs.push_back({s.exceed_prob, s.exceeded});
        }
        const auto hist = pit_histogram(pits, kBins);
        for (int b = 0; b < kBins; ++b) {
            pw.field(model_name(model)).field(b + 1);
            pw.field(double(b) / kBins).field(double(b + 1) / kBins);
            pw.field(hist[std::size_t(b)]);
            pw.end_row();
        }
        const auto write_bins = [&](const char* filter, std::optional<double> min_prob) {
            for (const auto& bin : reliability(recs, kBins, min_prob)) {
                rw.field(model_name(model)).field(filter).field(bin.index);
                rw.field(bin.lo).field(bin.hi).field(bin.count).field(bin.mean_prob).field(bin.freq);
                rw.end_row();
            }
        };
        write_bins("all", std::nullopt);
        write_bins("gt10", 0.1);
    }
    pw.close();
    rw.close();

    csv::Writer kw(out_dir / "skipped.csv", {"date", "hour", "reason"});
    for (const auto& s : result.skipped) {
        kw.field(s.date).field(s.hour).field(s.reason);
        kw.end_row();
    }
    kw.close();
}

std::vector<ScoreRecord> load_scores(const std::filesystem::path& file) {
    csv::Reader reader(file, {"date", "hour", "model", "crps", "qs10", "qs90", "pit", "exceed_prob",
                              "exceeded"});
    std::vector<ScoreRecord> out;
    csv::Row row({}, nullptr, 0);
    while (reader.next(row)) {
        ScoreRecord s;
        s.date = row.date(0);
        s.hour = row.integer(1);
        check_hour(row, s.hour);
        const auto model = parse_model(row.str(2));
        if (!model) row.fail("unknown model \"" + std::string(row.str(2)) + "\"");
        s.model = *model;
        s.crps = row.num(3);
        s.qs10 = row.num(4);
        s.qs90 = row.num(5);
        s.pit = row.num(6);
        s.exceed_prob = row.num(7);
        const int ex = row.integer(8);
        if (ex != 0 && ex != 1) row.fail("exceeded must be 0 or 1");
        s.exceeded = ex == 1;
        out.push_back(s);
    }
    return out;
}

std::vector<ForecastRecord> load_forecast_records(const std::filesystem::path& file) {
    csv::Reader reader(file, {"date", "hour", "model", "q05", "q10", "q20", "q50", "q80", "q90",
                              "q95", "exceed_50"});
    std::vector<ForecastRecord> out;
    csv::Row row({}, nullptr, 0);
    while (reader.next(row)) {
        ForecastRecord f;
        f.date = row.date(0);
        f.hour = row.integer(1);
        check_hour(row, f.hour);
        const auto model = parse_model(row.str(2));
        if (!model) row.fail("unknown model \"" + std::string(row.str(2)) + "\"");
        f.model = *model;
        for (int i = 0; i < kNumForecastTaus; ++i) f.q[i] = row.num(std::size_t(3 + i));
        f.exceed_prob = row.num(10);
        out.push_back(f);
    }
    return out;
}

}  // namespace curvedress
