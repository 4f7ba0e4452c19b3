#include "homewatch/time.hpp"

#include <fmt/format.h>

#include <charconv>
#include <stdexcept>

namespace homewatch {

namespace {

// Proleptic Gregorian civil date <-> days since 1970-01-01.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
    std::int64_t year;
    unsigned month;
    unsigned day;
};

Civil civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {y + (m <= 2), m, d};
}

int parse_field(std::string_view text, std::size_t pos, std::size_t len) {
    int value = 0;
    const char* first = text.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, value);
    if (ec != std::errc{} || ptr != first + len) {
        throw std::invalid_argument(fmt::format("malformed timestamp '{}'", text));
    }
    return value;
}

}  // namespace

Timestamp make_utc(int year, unsigned month, unsigned day, int hour, int minute, int second) {
    const std::int64_t days = days_from_civil(year, month, day);
    return from_epoch_seconds(days * 86400 + hour * 3600 + minute * 60 + second);
}

std::string format_iso8601(Timestamp t) {
    const std::int64_t secs = to_epoch_seconds(t);
    std::int64_t days = secs / 86400;
    std::int64_t rem = secs % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const Civil c = civil_from_days(days);
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", c.year, c.month, c.day,
                       rem / 3600, (rem % 3600) / 60, rem % 60);
}

Timestamp parse_iso8601(std::string_view text) {
    if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
        text[13] != ':' || text[16] != ':' || text[19] != 'Z') {
        throw std::invalid_argument(fmt::format("malformed timestamp '{}'", text));
    }
    const int year = parse_field(text, 0, 4);
    const int month = parse_field(text, 5, 2);
    const int day = parse_field(text, 8, 2);
    const int hour = parse_field(text, 11, 2);
    const int minute = parse_field(text, 14, 2);
    const int second = parse_field(text, 17, 2);
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 ||
        second > 60) {
        throw std::invalid_argument(fmt::format("timestamp out of range '{}'", text));
    }
    return make_utc(year, static_cast<unsigned>(month), static_cast<unsigned>(day), hour, minute,
                    second);
}

Timestamp SystemClock::now() const {
    return std::chrono::time_point_cast<Duration>(std::chrono::system_clock::now());
}

}  // namespace homewatch
