#pragma once

#include <atomic>
#include <cstdint>
#include <string>

namespace proteus {

// Injectable time source. Every externally visible timestamp (harvestedAt,
// generatedAt, crawl report times) goes through one of these so that tests
// and the --clock-fixed flag can pin the output bytes.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_epoch_seconds() const = 0;
};

class SystemClock final : public Clock {
public:
    std::int64_t now_epoch_seconds() const override;
};

class FixedClock final : public Clock {
public:
    explicit FixedClock(std::int64_t epoch_seconds) : now_(epoch_seconds) {}

    std::int64_t now_epoch_seconds() const override { return now_.load(); }
    void set(std::int64_t epoch_seconds) { now_.store(epoch_seconds); }
    void advance(std::int64_t seconds) { now_.fetch_add(seconds); }

private:
    std::atomic<std::int64_t> now_;
};

// "YYYY-MM-DDThh:mm:ssZ", UTC.
std::string format_iso8601_utc(std::int64_t epoch_seconds);

// Inverse of format_iso8601_utc; throws SchemaError on anything else.
std::int64_t parse_iso8601_utc(const std::string& text);

}  // namespace proteus
