#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curvedress/curves.hpp"
#include "curvedress/date.hpp"
#include "curvedress/kernels.hpp"
#include "curvedress/kvmap.hpp"

namespace curvedress {

/// One historical volume residual: e = v_hat - v where v_hat is the
/// volume implied by inverting the same-day ask curve at the price forecast.
struct VolumeResidual {
    Date date;
    int hour;           // 1..24
    double e;           // MWh
    double delta_plus;  // MWh, kink feature of the same-day curve at p_hat
    double p_hat;       // EUR/MWh
};

struct ModelConfig {
    double m = 50.0;            // EUR/MWh probe for the delta features
    double delta0 = 6150.0;     // MWh regime threshold
    int tail_window_days = 120; // per-hour trailing window for the tail fit
    int knn = 100;              // neighbors for the kink fit
    int diagnostic_knn = 500;   // neighbors for the diagnostic curve

    void validate() const;  // throws ValidationError
};

/// key = value file, one pair per line, '#' comments. Absent keys keep their
/// defaults; unknown keys are errors.
ModelConfig load_model_config(const std::filesystem::path& file);
void save_model_config(const ModelConfig& cfg, const std::filesystem::path& file);

/// Round-trip between the config and its key -> value form (exact decimal
/// rendering). `context` names the source in error messages.
KvMap to_kv(const ModelConfig& cfg);
ModelConfig model_config_from_kv(const KvMap& kv, const std::string& context);

enum class Regime { kink, tail };

const char* regime_name(Regime r);

/// Fitted Gaussian volume-error parameters for one (day, hour) forecast.
struct ErrorDistribution {
    double mu;     // MWh
    double sigma;  // MWh; 0 only for degenerate (constant-residual) history
    Regime regime;
};

/// Join row for residual computation; missing pieces make the record
/// skippable, not fatal.
struct HistoryRecord {
    Date date;
    int hour = 0;
    const StepCurve* ask = nullptr;  // same-day ask curve
    std::optional<double> volume;    // settled volume, MWh
    std::optional<double> p_hat;     // point price forecast, EUR/MWh
};

struct SkippedRecord {
    Date date;
    int hour;
    std::string reason;
};

struct ResidualComputation {
    std::vector<VolumeResidual> residuals;
    std::vector<SkippedRecord> skipped;
};

/// v_hat = inverse(same-day ask, p_hat); e = v_hat - volume; delta_plus from
/// the same curve with probe m. Records missing the curve, volume, or
/// forecast are reported in `skipped`.
ResidualComputation compute_residuals(std::span<const HistoryRecord> history,
                                      double m);

/// Residual store with the indexes the estimators need: per-hour date order
/// for the tail window, global (delta_plus, date, hour) order for the kNN
/// window. Rows may be added in any order; the backtest adds them day by day.
class ResidualTable {
  public:
    void add(const VolumeResidual& r);
    void add(std::span<const VolumeResidual> rs);

    std::size_t size() const { return all_.size(); }
    /// Number of rows strictly before `asof`.
    std::size_t count_before(Date asof) const;
    std::size_t count_hour_window(int hour, Date asof, int window_days) const;
    const std::vector<VolumeResidual>& rows() const { return all_; }

    /// Sample mean and sd (n-1) of e for `hour` over dates in
    /// [asof - window_days, asof). Throws InsufficientHistoryError below 2.
    kernels::Moments tail_moments(int hour, Date asof, int window_days) const;

    /// Sample moments of the k rank-neighbors of `query` in the ascending
    /// (delta_plus, date, hour) order over rows dated before `asof`; the
    /// window is centered on the insertion point and shifted inward at the
    /// ends so it always holds exactly k. Throws InsufficientHistoryError
    /// below k.
    kernels::Moments knn_moments(double query, Date asof, int k) const;

    /// Regime dispatch per the sigma^2 switch: delta_plus > delta0 uses the
    /// per-hour tail moments, otherwise the pooled kNN moments at delta_plus.
    ErrorDistribution error_distribution(const ModelConfig& cfg, Date asof,
                                         int hour, double delta_plus) const;

  private:
    struct HourSeries {
        std::vector<Date> dates;  // ascending
        std::vector<double> e;
    };

    // Indexes are rebuilt lazily on the first query after a batch of adds,
    // so bulk loading stays O(n log n). Not safe for concurrent first query.
    void ensure_index() const;

    std::vector<VolumeResidual> all_;
    mutable HourSeries by_hour_[24];
    // Ascending (delta_plus, date, hour); parallel arrays so the e-window is
    // a contiguous span for the reduction kernels.
    mutable std::vector<VolumeResidual> sorted_;
    mutable std::vector<double> sorted_delta_;
    mutable std::vector<double> sorted_e_;
    mutable bool dirty_ = false;
    Date max_date_{};
    bool any_ = false;
};

struct DiagnosticPoint {
    double delta_plus;
    double mean;  // moving k-neighbor sample mean of e
    double sd;    // moving k-neighbor sample sd of e
};

/// The moving-window diagnostic: one point per residual in ascending
/// delta_plus order, each with the moments of its k rank-neighbors.
/// Throws InsufficientHistoryError when fewer than k residuals exist.
std::vector<DiagnosticPoint> knn_diagnostic_curve(
    std::span<const VolumeResidual> residuals, int k);

/// Convenience one-shot forms of the table estimators.
kernels::Moments fit_tail_moments(std::span<const VolumeResidual> residuals,
                                  int hour, Date asof, int window_days);
kernels::Moments fit_knn_moments(std::span<const VolumeResidual> residuals,
                                 Date asof, double query_delta_plus, int k);
ErrorDistribution error_distribution(const ModelConfig& cfg,
                                     std::span<const VolumeResidual> residuals,
                                     Date asof, int hour, double delta_plus);

/// CSV round-trip: `date,hour,e_mwh,delta_plus_mwh,p_hat_eur`.
void save_residuals(std::span<const VolumeResidual> residuals,
                    const std::filesystem::path& file);
std::vector<VolumeResidual> load_residuals(const std::filesystem::path& file);

}  // namespace curvedress
