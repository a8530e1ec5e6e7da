#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace curvedress {

/// Calendar date stored as days since 1970-01-01 (proleptic Gregorian).
/// Arithmetic is plain day counting; no time zones, no DST.
class Date {
  public:
    Date() = default;
    static Date from_ymd(int year, unsigned month, unsigned day);
    static std::optional<Date> parse(std::string_view iso);  // "YYYY-MM-DD"
    static Date from_day_index(std::int32_t days) { return Date(days); }

    std::string to_string() const;
    std::int32_t day_index() const { return days_; }
    int weekday() const;      // 0 = Monday .. 6 = Sunday
    int day_of_year() const;  // 1-based

    Date operator+(int days) const { return Date(days_ + days); }
    Date operator-(int days) const { return Date(days_ - days); }
    int operator-(Date other) const { return days_ - other.days_; }
    Date& operator++() { ++days_; return *this; }
    auto operator<=>(const Date&) const = default;

  private:
    explicit Date(std::int32_t days) : days_(days) {}
    std::int32_t days_ = 0;
};

}  // namespace curvedress
