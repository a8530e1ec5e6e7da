#include "curvedress/volmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "curvedress/csv.hpp"
#include "kvconfig.hpp"

namespace curvedress {

void ModelConfig::validate() const {
    if (!(m > 0)) throw ValidationError("model config: m must be positive");
    if (!(delta0 > 0)) throw ValidationError("model config: delta0 must be positive");
    if (tail_window_days <= 0)
        throw ValidationError("model config: tail_window_days must be positive");
    if (knn <= 0) throw ValidationError("model config: knn must be positive");
    if (diagnostic_knn <= 0)
        throw ValidationError("model config: diagnostic_knn must be positive");
}

const char* regime_name(Regime r) { return r == Regime::kink ? "kink" : "tail"; }

ResidualComputation compute_residuals(std::span<const HistoryRecord> history,
                                      double m) {
    ResidualComputation out;
    out.residuals.reserve(history.size());
    for (const auto& rec : history) {
        if (rec.ask == nullptr) {
            out.skipped.push_back({rec.date, rec.hour, "no ask curve"});
            continue;
        }
        if (!rec.volume) {
            out.skipped.push_back({rec.date, rec.hour, "no settled volume"});
            continue;
        }
        if (!rec.p_hat) {
            out.skipped.push_back({rec.date, rec.hour, "no point forecast"});
            continue;
        }
        const double v_hat = rec.ask->inverse(*rec.p_hat).volume;
        const auto feat = delta_features(*rec.ask, *rec.p_hat, m);
        out.residuals.push_back(
            {rec.date, rec.hour, v_hat - *rec.volume, feat.delta_plus, *rec.p_hat});
    }
    return out;
}

namespace {

bool delta_order(const VolumeResidual& a, const VolumeResidual& b) {
    if (a.delta_plus != b.delta_plus) return a.delta_plus < b.delta_plus;
    if (a.date != b.date) return a.date < b.date;
    return a.hour < b.hour;
}

// Window of exactly k positions centered on the insertion point of `query`
// in the ascending delta array, shifted inward at the ends.
std::size_t knn_window_start(std::span<const double> deltas, double query,
                             std::size_t k) {
    const std::size_t n = deltas.size();
    const auto ins = static_cast<std::size_t>(
        std::lower_bound(deltas.begin(), deltas.end(), query) - deltas.begin());
    const std::size_t half = k / 2;
    std::size_t lo = ins > half ? ins - half : 0;
    if (lo + k > n) lo = n - k;
    return lo;
}

}  // namespace

void ResidualTable::add(const VolumeResidual& r) {
    if (r.hour < 1 || r.hour > 24)
        throw ValidationError("residual hour out of 1..24: " + std::to_string(r.hour));
    if (!std::isfinite(r.e) || !std::isfinite(r.delta_plus) || r.delta_plus < 0)
        throw ValidationError("residual for " + r.date.to_string() + " h" +
                              std::to_string(r.hour) + " is malformed");
    all_.push_back(r);
    if (!any_ || r.date > max_date_) max_date_ = r.date;
    any_ = true;
    dirty_ = true;
}

void ResidualTable::add(std::span<const VolumeResidual> rs) {
    for (const auto& r : rs) add(r);
}

void ResidualTable::ensure_index() const {
    if (!dirty_) return;
    sorted_ = all_;
    std::stable_sort(sorted_.begin(), sorted_.end(), delta_order);
    sorted_delta_.resize(sorted_.size());
    sorted_e_.resize(sorted_.size());
    for (std::size_t i = 0; i < sorted_.size(); ++i) {
        sorted_delta_[i] = sorted_[i].delta_plus;
        sorted_e_[i] = sorted_[i].e;
    }
    for (auto& hs : by_hour_) {
        hs.dates.clear();
        hs.e.clear();
    }
    std::vector<VolumeResidual> by_date = all_;
    std::stable_sort(by_date.begin(), by_date.end(),
                     [](const VolumeResidual& a, const VolumeResidual& b) {
                         return a.date < b.date;
                     });
    for (const auto& r : by_date) {
        auto& hs = by_hour_[r.hour - 1];
        hs.dates.push_back(r.date);
        hs.e.push_back(r.e);
    }
    dirty_ = false;
}

std::size_t ResidualTable::count_before(Date asof) const {
    if (!any_) return 0;
    if (max_date_ < asof) return all_.size();
    std::size_t n = 0;
    for (const auto& r : all_) n += r.date < asof ? 1 : 0;
    return n;
}

std::size_t ResidualTable::count_hour_window(int hour, Date asof,
                                             int window_days) const {
    ensure_index();
    const auto& hs = by_hour_[hour - 1];
    const auto lo = std::lower_bound(hs.dates.begin(), hs.dates.end(),
                                     asof - window_days);
    const auto hi = std::lower_bound(lo, hs.dates.end(), asof);
    return static_cast<std::size_t>(hi - lo);
}

kernels::Moments ResidualTable::tail_moments(int hour, Date asof,
                                             int window_days) const {
    if (hour < 1 || hour > 24)
        throw ValidationError("hour out of 1..24: " + std::to_string(hour));
    ensure_index();
    const auto& hs = by_hour_[hour - 1];
    const auto first = std::lower_bound(hs.dates.begin(), hs.dates.end(),
                                        asof - window_days);
    const auto last = std::lower_bound(first, hs.dates.end(), asof);
    const auto lo = static_cast<std::size_t>(first - hs.dates.begin());
    const auto n = static_cast<std::size_t>(last - first);
    if (n < 2)
        throw InsufficientHistoryError(
            "tail fit for hour " + std::to_string(hour) + " as of " +
            asof.to_string() + ": " + std::to_string(n) + " residual(s) in the " +
            std::to_string(window_days) + "-day window; need 2");
    return kernels::mean_sd(std::span(hs.e).subspan(lo, n));
}

kernels::Moments ResidualTable::knn_moments(double query, Date asof, int k) const {
    if (k <= 0) throw ValidationError("knn: k must be positive");
    ensure_index();
    const auto uk = static_cast<std::size_t>(k);
    if (any_ && max_date_ < asof) {
        // Structural fast path: every row is already strictly in the past.
        if (sorted_e_.size() < uk)
            throw InsufficientHistoryError(
                "kNN fit as of " + asof.to_string() + ": " +
                std::to_string(sorted_e_.size()) + " residual(s); need " +
                std::to_string(k));
        const auto lo = knn_window_start(sorted_delta_, query, uk);
        return kernels::mean_sd(std::span(sorted_e_).subspan(lo, uk));
    }
    std::vector<double> deltas, es;
    deltas.reserve(sorted_.size());
    es.reserve(sorted_.size());
    for (const auto& r : sorted_) {  // stable filter keeps the sort order
        if (r.date < asof) {
            deltas.push_back(r.delta_plus);
            es.push_back(r.e);
        }
    }
    if (es.size() < uk)
        throw InsufficientHistoryError("kNN fit as of " + asof.to_string() + ": " +
                                       std::to_string(es.size()) +
                                       " residual(s); need " + std::to_string(k));
    const auto lo = knn_window_start(deltas, query, uk);
    return kernels::mean_sd(std::span(es).subspan(lo, uk));
}

ErrorDistribution ResidualTable::error_distribution(const ModelConfig& cfg,
                                                    Date asof, int hour,
                                                    double delta_plus) const {
    if (delta_plus > cfg.delta0) {
        const auto m = tail_moments(hour, asof, cfg.tail_window_days);
        return {m.mean, m.sd, Regime::tail};
    }
    const auto m = knn_moments(delta_plus, asof, cfg.knn);
    return {m.mean, m.sd, Regime::kink};
}

std::vector<DiagnosticPoint> knn_diagnostic_curve(
    std::span<const VolumeResidual> residuals, int k) {
    if (k <= 0) throw ValidationError("diagnostic: k must be positive");
    const auto uk = static_cast<std::size_t>(k);
    if (residuals.size() < uk)
        throw InsufficientHistoryError(
            "diagnostic curve: " + std::to_string(residuals.size()) +
            " residual(s); need " + std::to_string(k));
    std::vector<VolumeResidual> sorted(residuals.begin(), residuals.end());
    std::sort(sorted.begin(), sorted.end(), delta_order);
    std::vector<double> es(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) es[i] = sorted[i].e;

    std::vector<DiagnosticPoint> out;
    out.reserve(sorted.size());
    const std::size_t n = sorted.size();
    const std::size_t half = uk / 2;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t lo = i > half ? i - half : 0;
        if (lo + uk > n) lo = n - uk;
        const auto m = kernels::mean_sd(std::span(es).subspan(lo, uk));
        out.push_back({sorted[i].delta_plus, m.mean, m.sd});
    }
    return out;
}

kernels::Moments fit_tail_moments(std::span<const VolumeResidual> residuals,
                                  int hour, Date asof, int window_days) {
    ResidualTable t;
    t.add(residuals);
    return t.tail_moments(hour, asof, window_days);
}

kernels::Moments fit_knn_moments(std::span<const VolumeResidual> residuals,
                                 Date asof, double query_delta_plus, int k) {
    ResidualTable t;
    t.add(residuals);
    return t.knn_moments(query_delta_plus, asof, k);
}

ErrorDistribution error_distribution(const ModelConfig& cfg,
                                     std::span<const VolumeResidual> residuals,
                                     Date asof, int hour, double delta_plus) {
    ResidualTable t;
    t.add(residuals);
    return t.error_distribution(cfg, asof, hour, delta_plus);
}

void save_residuals(std::span<const VolumeResidual> residuals,
                    const std::filesystem::path& file) {
    csv::Writer w(file, {"date", "hour", "e_mwh", "delta_plus_mwh", "p_hat_eur"});
    for (const auto& r : residuals) {
        w.field(r.date).field(r.hour).field(r.e).field(r.delta_plus).field(r.p_hat);
        w.end_row();
    }
    w.close();
}

std::vector<VolumeResidual> load_residuals(const std::filesystem::path& file) {
    csv::Reader reader(file,
                       {"date", "hour", "e_mwh", "delta_plus_mwh", "p_hat_eur"});
    std::vector<VolumeResidual> out;
    csv::Row row({}, nullptr, 0);
    while (reader.next(row)) {
        VolumeResidual r{row.date(0), row.integer(1), row.num(2), row.num(3),
                         row.num(4)};
        if (r.hour < 1 || r.hour > 24)
            row.fail("hour must be in 1..24, got " + std::to_string(r.hour));
        out.push_back(r);
    }
    return out;
}

ModelConfig model_config_from_kv(const KvMap& kv, const std::string& context) {
    ModelConfig cfg;
    for (const auto& [key, val] : kv) {
        if (key == "m") cfg.m = kvconfig::to_double(context, key, val);
        else if (key == "delta0") cfg.delta0 = kvconfig::to_double(context, key, val);
        else if (key == "tail_window_days")
            cfg.tail_window_days = kvconfig::to_int(context, key, val);
        else if (key == "knn") cfg.knn = kvconfig::to_int(context, key, val);
        else if (key == "diagnostic_knn") cfg.diagnostic_knn = kvconfig::to_int(context, key, val);
        else throw ValidationError(context + ": unknown model config key " + key);
    }
    cfg.validate();
    return cfg;
}

KvMap to_kv(const ModelConfig& cfg) {
    return {{"m", csv::format_double(cfg.m)},
            {"delta0", csv::format_double(cfg.delta0)},
            {"tail_window_days", std::to_string(cfg.tail_window_days)},
            {"knn", std::to_string(cfg.knn)},
            {"diagnostic_knn", std::to_string(cfg.diagnostic_knn)}};
}

ModelConfig load_model_config(const std::filesystem::path& file) {
    return model_config_from_kv(kvconfig::parse(file), file.string());
}

void save_model_config(const ModelConfig& cfg, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw ValidationError("cannot write config " + file.string());
    out << "m = " << csv::format_double(cfg.m) << "\n"
        << "delta0 = " << csv::format_double(cfg.delta0) << "\n"
        << "tail_window_days = " << cfg.tail_window_days << "\n"
        << "knn = " << cfg.knn << "\n"
        << "diagnostic_knn = " << cfg.diagnostic_knn << "\n";
    if (!out.flush()) throw ValidationError("write failure on " + file.string());
}

}  // namespace curvedress
