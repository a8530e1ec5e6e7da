#include "curvedress/date.hpp"

#include <chrono>
#include <cstdio>

#include "curvedress/errors.hpp"

namespace curvedress {

namespace chr = std::chrono;

Date Date::from_ymd(int year, unsigned month, unsigned day) {
    chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
    if (!ymd.ok()) {
        throw ValidationError("invalid calendar date: " + std::to_string(year) + "-" +
                              std::to_string(month) + "-" + std::to_string(day));
    }
    return Date(chr::sys_days{ymd}.time_since_epoch().count());
}

std::optional<Date> Date::parse(std::string_view iso) {
    // Strict zero-padded "YYYY-MM-DD" only.
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
    auto digits = [&](int from, int to) -> int {
        int v = 0;
        for (int i = from; i < to; ++i) {
            const char c = iso[std::size_t(i)];
            if (c < '0' || c > '9') return -1;
            v = v * 10 + (c - '0');
        }
        return v;
    };
    const int y = digits(0, 4), m = digits(5, 7), d = digits(8, 10);
    if (y < 0 || m < 0 || d < 0) return std::nullopt;
    chr::year_month_day ymd{chr::year{y}, chr::month{unsigned(m)}, chr::day{unsigned(d)}};
    if (!ymd.ok()) return std::nullopt;
    return Date(chr::sys_days{ymd}.time_since_epoch().count());
}

std::string Date::to_string() const {
    chr::year_month_day ymd{chr::sys_days{chr::days{days_}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

int Date::weekday() const {
    chr::weekday wd{chr::sys_days{chr::days{days_}}};
    return int(wd.iso_encoding()) - 1;
}

int Date::day_of_year() const {
    chr::year_month_day ymd{chr::sys_days{chr::days{days_}}};
    chr::sys_days jan1{chr::year_month_day{ymd.year(), chr::month{1}, chr::day{1}}};
    return int((chr::sys_days{chr::days{days_}} - jan1).count()) + 1;
}

}  // namespace curvedress
