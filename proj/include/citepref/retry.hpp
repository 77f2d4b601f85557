#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>

namespace citepref {

/// Exponential backoff with multiplicative jitter in [1 - jitter, 1 + jitter].
struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_delay{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{30'000};
  double jitter = 0.5;

  /// Delay before attempt `attempt + 1`, given `attempt` >= 1 failed attempts.
  std::chrono::milliseconds backoff(int attempt, std::uint64_t jitter_seed) const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
Sleeper real_sleeper();

/// Token bucket; `acquire` blocks until a slot is free. A rate <= 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second, double burst = 1.0);
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  double rate_;
  double burst_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mu_;
};

}  // namespace citepref
