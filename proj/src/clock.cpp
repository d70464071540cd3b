#include "storyloop/clock.hpp"

#include <chrono>
#include <cmath>

namespace storyloop {

std::int64_t SystemClock::wall_ms() const {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

double SystemClock::monotonic_s() const {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

SystemClock& SystemClock::instance() {
  static SystemClock clock;
  return clock;
}

std::int64_t ManualClock::wall_ms() const {
  std::lock_guard lock(mutex_);
  return wall_start_ + elapsed_us_ / 1000;
}

double ManualClock::monotonic_s() const {
  std::lock_guard lock(mutex_);
  return static_cast<double>(elapsed_us_) / 1e6;
}

void ManualClock::account_latency(double seconds) {
  if (follow_latency_) advance(seconds);
}

void ManualClock::advance(double seconds) {
  if (!(seconds > 0)) return;
  std::lock_guard lock(mutex_);
  elapsed_us_ += static_cast<std::int64_t>(std::llround(seconds * 1e6));
}

}  // namespace storyloop
