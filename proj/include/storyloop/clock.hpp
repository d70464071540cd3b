#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>

namespace storyloop {

/// Time source for timestamps and phase durations.
class Clock {
 public:
  virtual ~Clock() = default;
  /// Milliseconds since the Unix epoch.
  virtual std::int64_t wall_ms() const = 0;
  /// Seconds on a monotonic scale with arbitrary origin.
  virtual double monotonic_s() const = 0;
  /// Called after each provider call with the latency the provider reports.
  /// Real clocks ignore it; simulated clocks advance by it.
  virtual void account_latency(double /*seconds*/) {}
};

class SystemClock final : public Clock {
 public:
  std::int64_t wall_ms() const override;
  double monotonic_s() const override;

  static SystemClock& instance();
};

/// Deterministic clock. Time moves only through advance() and, when
/// follow_latency is set, through account_latency().
class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::int64_t start_wall_ms = 1'700'000'000'000, bool follow_latency = true)
      : wall_start_(start_wall_ms), follow_latency_(follow_latency) {}

  std::int64_t wall_ms() const override;
  double monotonic_s() const override;
  void account_latency(double seconds) override;

  void advance(double seconds);

 private:
  mutable std::mutex mutex_;
  std::int64_t wall_start_;
  std::int64_t elapsed_us_ = 0;
  bool follow_latency_;
};

}  // namespace storyloop
