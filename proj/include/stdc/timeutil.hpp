#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace stdc {

// Wall-clock hour as a count of whole hours since 1970-01-01T00:00 (UTC-naive).
struct HourStamp {
    std::int64_t hours = 0;

    auto operator<=>(const HourStamp&) const = default;
    HourStamp next() const { return HourStamp{hours + 1}; }
};

struct ParsedTime {
    HourStamp hour;
    // Minutes/seconds past the hour; non-zero means the stamp is not on the hour.
    int sub_hour_seconds = 0;
};

// Accepts "YYYY-MM-DDTHH:MM[:SS]" with optional trailing 'Z' or a space instead of 'T'.
std::optional<ParsedTime> parse_iso_time(std::string_view text);
std::string format_iso_hour(HourStamp h);

int hour_of_day(HourStamp h);
// 0 = Monday ... 6 = Sunday.
int day_of_week(HourStamp h);

}  // namespace stdc
