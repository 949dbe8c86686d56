#pragma once

#include <atomic>
#include <chrono>

namespace u2f {

using Millis = std::chrono::milliseconds;

/// Time source used for deadlines, latency and rate limiting. Tests swap in
/// FakeClock so timeout behaviour is checked without waiting.
class Clock {
public:
    using TimePoint = std::chrono::steady_clock::time_point;

    virtual ~Clock() = default;
    virtual TimePoint now() const = 0;
    virtual void sleep_for(Millis d) = 0;

    /// Real time to block on a pending result before re-checking the clock.
    virtual Millis wait_slice(Millis remaining) const = 0;
    /// Called after each unfinished wait slice.
    virtual void on_idle() {}
};

class SteadyClock final : public Clock {
public:
    TimePoint now() const override { return std::chrono::steady_clock::now(); }
    void sleep_for(Millis d) override;
    Millis wait_slice(Millis remaining) const override { return remaining; }
};

/// Manually driven clock. Each idle poll advances time by `tick`.
class FakeClock final : public Clock {
public:
    explicit FakeClock(Millis tick = Millis(100)) : tick_(tick) {}

    TimePoint now() const override { return TimePoint(Millis(now_ms_.load())); }
    void sleep_for(Millis d) override { advance(d); }
    Millis wait_slice(Millis) const override { return Millis(1); }
    void on_idle() override { advance(tick_); }

    void advance(Millis d) { now_ms_ += d.count(); }
    [[nodiscard]] Millis elapsed() const { return Millis(now_ms_.load()); }

private:
    Millis tick_;
    std::atomic<long long> now_ms_{0};
};

Clock& default_clock();

} // namespace u2f
