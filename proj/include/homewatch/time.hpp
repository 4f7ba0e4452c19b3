#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace homewatch {

/// UTC instant with one-second resolution. All timestamps in the system are UTC.
using Timestamp = std::chrono::sys_seconds;
using Duration = std::chrono::seconds;

using namespace std::chrono_literals;

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(Timestamp t);

/// Parses "YYYY-MM-DDTHH:MM:SSZ" (the 'Z' is mandatory). Throws std::invalid_argument.
Timestamp parse_iso8601(std::string_view text);

Timestamp make_utc(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                   int second = 0);

inline std::int64_t to_epoch_seconds(Timestamp t) { return t.time_since_epoch().count(); }
inline Timestamp from_epoch_seconds(std::int64_t s) { return Timestamp{Duration{s}}; }

/// Source of "now". Only the service edge reads a clock; every domain operation takes time
/// as an argument.
class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override;
};

class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start) : now_(to_epoch_seconds(start)) {}

    Timestamp now() const override { return from_epoch_seconds(now_.load()); }
    void set(Timestamp t) { now_.store(to_epoch_seconds(t)); }
    void advance(Duration d) { now_.fetch_add(d.count()); }

private:
    std::atomic<std::int64_t> now_;
};

}  // namespace homewatch
