#include "curvedress/curves.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "curvedress/csv.hpp"

namespace curvedress {

const char* side_name(Side s) { return s == Side::bid ? "BID" : "ASK"; }

StepCurve::StepCurve(Side side, std::vector<CurvePoint> points)
    : side_(side), points_(std::move(points)) {
    if (points_.size() < 2)
        throw ValidationError("curve needs at least 2 breakpoints, got " +
                              std::to_string(points_.size()));
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& pt = points_[i];
        if (!std::isfinite(pt.volume) || !std::isfinite(pt.price))
            throw ValidationError("non-finite breakpoint at index " +
                                  std::to_string(i));
        if (i > 0 && !(points_[i - 1].volume < pt.volume))
            throw ValidationError("volumes not strictly increasing at index " +
                                  std::to_string(i));
        if (i > 0) {
            const double prev = points_[i - 1].price;
            const bool ok = side_ == Side::ask ? pt.price >= prev : pt.price <= prev;
            if (!ok)
                throw ValidationError(std::string("prices not ") +
                                      (side_ == Side::ask ? "nondecreasing"
                                                          : "nonincreasing") +
                                      " at index " + std::to_string(i));
        }
    }
}

double StepCurve::price_min() const {
    return side_ == Side::ask ? points_.front().price : points_.back().price;
}

double StepCurve::price_max() const {
    return side_ == Side::ask ? points_.back().price : points_.front().price;
}

double StepCurve::eval(double v) const {
    if (std::isnan(v)) throw ValidationError("eval: NaN volume");
    if (v <= points_.front().volume) return points_.front().price;
    if (v >= points_.back().volume) return points_.back().price;
    // Largest i with points_[i].volume <= v.
    const auto it = std::upper_bound(
        points_.begin(), points_.end(), v,
        [](double x, const CurvePoint& pt) { return x < pt.volume; });
    return std::prev(it)->price;
}

StepCurve::InverseResult StepCurve::inverse(double p) const {
    if (std::isnan(p)) throw ValidationError("inverse: NaN price");
    if (side_ == Side::ask) {
        if (p < points_.front().price) return {points_.front().volume, true};
        if (p >= points_.back().price) return {points_.back().volume, true};
        // Level set {v : s(v) <= p} is [v_0, v_{i+1}) where i is the largest
        // index with price_i <= p; its sup is the next breakpoint volume.
        const auto it = std::upper_bound(
            points_.begin(), points_.end(), p,
            [](double x, const CurvePoint& pt) { return x < pt.price; });
        return {it->volume, false};
    }
    // Bid: b nonincreasing, level set {v : b(v) >= p} is a prefix.
    if (p > points_.front().price) return {points_.front().volume, true};
    if (p <= points_.back().price) return {points_.back().volume, true};
    const auto it = std::upper_bound(
        points_.begin(), points_.end(), p,
        [](double x, const CurvePoint& pt) { return x > pt.price; });
    return {it->volume, false};
}

Settlement settle(const StepCurve& bid, const StepCurve& ask) {
    const double lo = std::max(bid.volume_min(), ask.volume_min());
    const double hi = std::min(bid.volume_max(), ask.volume_max());
    if (lo > hi)
        throw DisjointDomainsError(
            "bid and ask curves share no volume interval: bid [" +
            csv::format_double(bid.volume_min()) + ", " +
            csv::format_double(bid.volume_max()) + "], ask [" +
            csv::format_double(ask.volume_min()) + ", " +
            csv::format_double(ask.volume_max()) + "]");

    std::vector<double> candidates;
    candidates.reserve(bid.points().size() + ask.points().size());
    for (const auto& pt : bid.points()) candidates.push_back(std::clamp(pt.volume, lo, hi));
    for (const auto& pt : ask.points()) candidates.push_back(std::clamp(pt.volume, lo, hi));
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()),
                     candidates.end());

    double best_v = candidates.front();
    double best_gap = std::fabs(bid.eval(best_v) - ask.eval(best_v));
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double v = candidates[i];
        const double gap = std::fabs(bid.eval(v) - ask.eval(v));
        if (gap < best_gap) {  // strict: ties keep the smallest volume
            best_gap = gap;
            best_v = v;
        }
    }
    return {best_v, ask.eval(best_v), best_gap};
}

CurveFeature delta_features(const StepCurve& ask, double p_hat, double m) {
    if (!(m > 0)) throw ValidationError("delta_features: m must be positive");
    const auto at = ask.inverse(p_hat);
    const auto up = ask.inverse(p_hat + m);
    const auto dn = ask.inverse(p_hat - m);
    return {std::fabs(up.volume - at.volume), std::fabs(dn.volume - at.volume),
            m, at.clamped || up.clamped || dn.clamped};
}

namespace {

struct GroupState {
    HourKey key{};
    Side side = Side::bid;
    std::vector<CurvePoint> pts;
    long first_line = 0;
    bool open = false;
};

std::string group_context(const GroupState& g) {
    return "date=" + g.key.date.to_string() + " hour=" + std::to_string(g.key.hour) +
           " side=" + side_name(g.side);
}

void flush_group(CurveDataset& out, GroupState& g, const std::string& file) {
    if (!g.open) return;
    auto& slot = out[g.key];
    auto& side_slot = g.side == Side::bid ? slot.bid : slot.ask;
    if (side_slot.has_value())
        throw CsvError(file + ":" + std::to_string(g.first_line) +
                       ": duplicate group " + group_context(g) +
                       " (rows for one curve must be contiguous)");
    try {
        side_slot.emplace(g.side, std::move(g.pts));
    } catch (const ValidationError& e) {
        throw CsvError(file + ":" + std::to_string(g.first_line) + ": " +
                       group_context(g) + ": " + e.what());
    }
    g.pts.clear();
    g.open = false;
}

}  // namespace

CurveDataset load_curves(const std::filesystem::path& file, bool allow_out_of_range) {
    csv::Reader reader(file, {"date", "hour", "side", "volume_mwh", "price_eur"});
    CurveDataset out;
    GroupState g;
    csv::Row row({}, nullptr, 0);
    while (reader.next(row)) {
        const Date date = row.date(0);
        const int hour = row.integer(1);
        if (hour < 1 || hour > 24)
            row.fail("hour must be in 1..24, got " + std::to_string(hour));
        const std::string_view side_s = row.raw(2);
        Side side;
        if (side_s == "BID") side = Side::bid;
        else if (side_s == "ASK") side = Side::ask;
        else row.fail("side must be BID or ASK, got \"" + std::string(side_s) + "\"");
        const double volume = row.num(3);
        const double price = row.num(4);
        if (!allow_out_of_range && !(price >= kPriceFloor && price <= kPriceCap))
            row.fail("price " + csv::format_double(price) + " outside [" +
                     csv::format_double(kPriceFloor) + ", " +
                     csv::format_double(kPriceCap) + "] (see --allow-price-range)");

        const HourKey key{date, hour};
        if (!g.open || key != g.key || side != g.side) {
            flush_group(out, g, reader.filename());
            g.key = key;
            g.side = side;
            g.first_line = row.line();
            g.open = true;
        }
        g.pts.push_back({volume, price});
    }
    flush_group(out, g, reader.filename());
    if (out.empty())
        throw CsvError(reader.filename() + ": no curve rows");
    return out;
}

}  // namespace curvedress
