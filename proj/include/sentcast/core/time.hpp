#pragma once

#include <sentcast/core/error.hpp>

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace sentcast {

/// UTC instant with millisecond precision.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

inline constexpr std::int64_t kMillisPerMinute = 60'000;

/// Index of a one-minute window, counted in whole minutes since the Unix epoch.
struct WindowKey {
    std::int64_t epoch_minute = 0;

    friend constexpr auto operator<=>(WindowKey, WindowKey) = default;

    [[nodiscard]] constexpr WindowKey next() const noexcept { return {epoch_minute + 1}; }
    [[nodiscard]] constexpr Timestamp start() const noexcept {
        return Timestamp{std::chrono::milliseconds{epoch_minute * kMillisPerMinute}};
    }
    [[nodiscard]] constexpr Timestamp end() const noexcept { return next().start(); }
};

inline constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) {
        --q;
    }
    return q;
}

/// Minute window containing `ts`. Floors toward negative infinity.
constexpr WindowKey window_key(Timestamp ts) noexcept {
    return WindowKey{floor_div(ts.time_since_epoch().count(), kMillisPerMinute)};
}

inline Timestamp from_epoch_millis(std::int64_t ms) {
    return Timestamp{std::chrono::milliseconds{ms}};
}

inline std::int64_t epoch_millis(Timestamp ts) noexcept { return ts.time_since_epoch().count(); }

namespace detail {

inline bool read_int(std::string_view s, std::size_t& pos, std::size_t digits, int& out) {
    if (pos + digits > s.size()) {
        return false;
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + digits, value);
    if (ec != std::errc{} || ptr != s.data() + pos + digits) {
        return false;
    }
    out = value;
    pos += digits;
    return true;
}

inline bool expect(std::string_view s, std::size_t& pos, char c) {
    if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
    }
    return false;
}

} // namespace detail

/// Parses `YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z|±HH:MM]`. A missing zone means UTC;
/// an explicit offset is folded into the returned UTC instant.
inline Timestamp parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    auto fail = [&]() -> Timestamp { throw DataError("invalid ISO-8601 timestamp: '" + std::string(s) + "'"); };

    std::size_t pos = 0;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    if (!detail::read_int(s, pos, 4, y) || !detail::expect(s, pos, '-') || !detail::read_int(s, pos, 2, mo) ||
        !detail::expect(s, pos, '-') || !detail::read_int(s, pos, 2, d)) {
        return fail();
    }
    if (!(detail::expect(s, pos, 'T') || detail::expect(s, pos, ' '))) {
        return fail();
    }
    if (!detail::read_int(s, pos, 2, h) || !detail::expect(s, pos, ':') || !detail::read_int(s, pos, 2, mi)) {
        return fail();
    }
    std::int64_t millis = 0;
    if (detail::expect(s, pos, ':')) {
        if (!detail::read_int(s, pos, 2, sec)) {
            return fail();
        }
        if (detail::expect(s, pos, '.')) {
            int scale = 100;
            std::size_t start = pos;
            while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
                millis += scale * (s[pos] - '0');
                scale /= 10;
                ++pos;
            }
            if (pos == start) {
                return fail();
            }
        }
    }
    std::int64_t offset_minutes = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z' || s[pos] == 'z') {
            ++pos;
        } else if (s[pos] == '+' || s[pos] == '-') {
            int sign = s[pos] == '-' ? -1 : 1;
            ++pos;
            int oh = 0, om = 0;
            if (!detail::read_int(s, pos, 2, oh)) {
                return fail();
            }
            detail::expect(s, pos, ':');
            if (!detail::read_int(s, pos, 2, om)) {
                return fail();
            }
            offset_minutes = sign * (oh * 60 + om);
        }
    }
    if (pos != s.size()) {
        return fail();
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) {
        return fail();
    }
    sys_days days{ymd};
    auto total = duration_cast<milliseconds>(days.time_since_epoch()) + hours{h} + minutes{mi} + seconds{sec} +
                 milliseconds{millis} - minutes{offset_minutes};
    return Timestamp{total};
}

/// `YYYY-MM-DDTHH:MM:SS.mmmZ`
inline std::string format_timestamp(Timestamp ts) {
    using namespace std::chrono;
    auto days = floor<std::chrono::days>(ts);
    year_month_day ymd{days};
    auto ms = (ts - days).count();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(ms / 3'600'000), static_cast<long long>(ms / 60'000 % 60),
                  static_cast<long long>(ms / 1000 % 60), static_cast<long long>(ms % 1000));
    return buf;
}

/// `YYYY-MM-DDTHH:MM:00Z`, the start of the window.
inline std::string format_window(WindowKey w) {
    std::string s = format_timestamp(w.start());
    return s.substr(0, 19) + "Z";
}

} // namespace sentcast
