#pragma once

#include <cmath>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace subperf {

/// UTC instant with millisecond resolution.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

namespace detail {

inline bool parse_digits(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int value = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        const char c = s[i];
        if (c < '0' || c > '9') return false;
        value = value * 10 + (c - '0');
    }
    out = value;
    return true;
}

}  // namespace detail

/// Parses `YYYY-MM-DDTHH:MM:SS[.fff]Z`. Up to three fractional digits.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    if (s.size() < 20) return std::nullopt;
    if (!detail::parse_digits(s, 0, 4, y) || s[4] != '-' || !detail::parse_digits(s, 5, 2, mo) ||
        s[7] != '-' || !detail::parse_digits(s, 8, 2, d) || (s[10] != 'T' && s[10] != 't') ||
        !detail::parse_digits(s, 11, 2, h) || s[13] != ':' || !detail::parse_digits(s, 14, 2, mi) ||
        s[16] != ':' || !detail::parse_digits(s, 17, 2, sec)) {
        return std::nullopt;
    }
    std::size_t pos = 19;
    int millis = 0;
    if (s[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (digits == 3) return std::nullopt;
            millis = millis * 10 + (s[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) return std::nullopt;
        for (; digits < 3; ++digits) millis *= 10;
    }
    if (pos + 1 != s.size() || (s[pos] != 'Z' && s[pos] != 'z')) return std::nullopt;
    if (h > 23 || mi > 59 || sec > 59) return std::nullopt;

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return Timestamp{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{sec} + milliseconds{millis};
}

/// Inverse of parse_timestamp; fractional seconds are printed only when non-zero.
inline std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day_point = floor<days>(t);
    const year_month_day ymd{day_point};
    auto rest = t - day_point;
    const auto h = duration_cast<hours>(rest);
    rest -= h;
    const auto mi = duration_cast<minutes>(rest);
    rest -= mi;
    const auto sec = duration_cast<seconds>(rest);
    rest -= sec;
    const auto ms = rest.count();

    char buf[40];
    if (ms == 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                      static_cast<int>(h.count()), static_cast<int>(mi.count()),
                      static_cast<int>(sec.count()));
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                      static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                      static_cast<unsigned>(ymd.day()), static_cast<int>(h.count()),
                      static_cast<int>(mi.count()), static_cast<int>(sec.count()),
                      static_cast<int>(ms));
    }
    return buf;
}

/// Signed hours from `from` to `to`.
inline double hours_between(Timestamp from, Timestamp to) {
    return static_cast<double>((to - from).count()) / 3'600'000.0;
}

inline Timestamp add_hours(Timestamp t, double hours) {
    return t + std::chrono::milliseconds{static_cast<long long>(std::llround(hours * 3'600'000.0))};
}

}  // namespace subperf
