#include "stdc/timeutil.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace stdc {

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc() && p == s.data() + pos + len;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

std::optional<ParsedTime> parse_iso_time(std::string_view text) {
    while (!text.empty() && (text.back() == 'Z' || text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
    int y, mo, d, h, mi, sec = 0;
    if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
        text[13] != ':') {
        return std::nullopt;
    }
    if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d) ||
        !read_int(text, 11, 2, h) || !read_int(text, 14, 2, mi)) {
        return std::nullopt;
    }
    if (text.size() > 16) {
        if (text.size() != 19 || text[16] != ':' || !read_int(text, 17, 2, sec)) return std::nullopt;
    }
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 59) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return ParsedTime{HourStamp{static_cast<std::int64_t>(days) * 24 + h}, mi * 60 + sec};
}

std::string format_iso_hour(HourStamp h) {
    using namespace std::chrono;
    const std::int64_t days = floor_div(h.hours, 24);
    const int hour = static_cast<int>(h.hours - days * 24);
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00:00", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour);
    return buf;
}

int hour_of_day(HourStamp h) { return static_cast<int>(h.hours - floor_div(h.hours, 24) * 24); }

int day_of_week(HourStamp h) {
    // 1970-01-01 was a Thursday (index 3 with Monday = 0).
    const std::int64_t days = floor_div(h.hours, 24);
    return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

}  // namespace stdc
