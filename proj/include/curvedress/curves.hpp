#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "curvedress/date.hpp"
#include "curvedress/errors.hpp"

namespace curvedress {

/// Exchange price codomain; the loader rejects prices outside it unless
/// explicitly overridden.
inline constexpr double kPriceFloor = -500.0;
inline constexpr double kPriceCap = 3000.0;

enum class Side { bid, ask };

const char* side_name(Side s);

struct CurvePoint {
    double volume;  // MWh, cumulative
    double price;   // EUR/MWh
};

/// Right-continuous piecewise-constant market curve for one (day, hour, side):
/// price is points[i].price on [points[i].volume, points[i+1].volume), and the
/// domain is [front().volume, back().volume]. Ask curves are nondecreasing in
/// price, bid curves nonincreasing. Immutable after construction.
class StepCurve {
  public:
    StepCurve(Side side, std::vector<CurvePoint> points);

    Side side() const { return side_; }
    const std::vector<CurvePoint>& points() const { return points_; }
    double volume_min() const { return points_.front().volume; }
    double volume_max() const { return points_.back().volume; }
    /// Smallest/largest price level on the curve.
    double price_min() const;
    double price_max() const;

    /// Step evaluation, clamped outside the domain: v below the domain gives
    /// the first price, at or above the last breakpoint the last price.
    double eval(double v) const;

    struct InverseResult {
        double volume;
        bool clamped;  // p was outside the curve's attainable-price behavior
    };

    /// Generalized sup-inverse. Ask: sup{v in domain : s(v) <= p}; bid:
    /// sup{v in domain : b(v) >= p}. Prices beyond the curve's range clamp to
    /// a domain endpoint with the flag set (ask: below min -> volume_min; at
    /// or above max -> volume_max; bid mirrored).
    InverseResult inverse(double p) const;

  private:
    Side side_;
    std::vector<CurvePoint> points_;
};

struct Settlement {
    double volume;  // MWh
    double price;   // EUR/MWh, ask curve at the settled volume
    double gap;     // minimized |b(v) - s(v)|
};

/// Intersects the curves: evaluates |b(v) - s(v)| at every breakpoint volume
/// of either curve inside the common domain and returns the minimizer
/// (smallest volume on ties). Throws DisjointDomainsError when the domains
/// share no interval.
Settlement settle(const StepCurve& bid, const StepCurve& ask);

struct CurveFeature {
    double delta_plus;   // MWh traversed when the price forecast rises by m
    double delta_minus;  // MWh traversed when it falls by m
    double m;            // EUR/MWh probe size
    bool clamped;        // any of the inversions left the curve's price range
};

/// The kink-proximity features: delta_plus = |inv(p_hat + m) - inv(p_hat)|,
/// delta_minus likewise with -m. Requires m > 0.
CurveFeature delta_features(const StepCurve& ask, double p_hat, double m);

struct HourKey {
    Date date;
    int hour;  // 1..24
    auto operator<=>(const HourKey&) const = default;
};

struct HourCurves {
    std::optional<StepCurve> bid;
    std::optional<StepCurve> ask;
};

using CurveDataset = std::map<HourKey, HourCurves>;

/// Loads `date,hour,side,volume_mwh,price_eur` rows grouped by
/// (date,hour,side), volumes ascending. Violations throw CsvError /
/// ValidationError naming (date, hour, side, row). Prices outside
/// [kPriceFloor, kPriceCap] are errors unless allow_out_of_range.
CurveDataset load_curves(const std::filesystem::path& file,
                         bool allow_out_of_range = false);

}  // namespace curvedress
