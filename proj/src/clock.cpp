#include "proteus/clock.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include "proteus/errors.hpp"

namespace proteus {

std::int64_t SystemClock::now_epoch_seconds() const {
    using namespace std::chrono;
    return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

std::string format_iso8601_utc(std::int64_t epoch_seconds) {
    std::time_t t = static_cast<std::time_t>(epoch_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

std::int64_t parse_iso8601_utc(const std::string& text) {
    std::tm tm{};
    int year = 0, mon = 0, day = 0, hour = 0, min = 0, sec = 0;
    char z = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c",
                    &year, &mon, &day, &hour, &min, &sec, &z) != 7 ||
        z != 'Z' || text.size() != 20) {
        throw SchemaError("invalid timestamp '" + text + "', expected YYYY-MM-DDThh:mm:ssZ");
    }
    if (mon < 1 || mon > 12 || day < 1 || day > 31 || hour > 23 || min > 59 || sec > 60) {
        throw SchemaError("timestamp out of range: '" + text + "'");
    }
    tm.tm_year = year - 1900;
    tm.tm_mon = mon - 1;
    tm.tm_mday = day;
    tm.tm_hour = hour;
    tm.tm_min = min;
    tm.tm_sec = sec;
    return static_cast<std::int64_t>(timegm(&tm));
}

}  // namespace proteus
