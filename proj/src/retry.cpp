#include "citepref/retry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace citepref {

std::chrono::milliseconds RetryPolicy::backoff(int attempt, std::uint64_t jitter_seed) const {
  const double base = static_cast<double>(initial_delay.count()) * std::pow(multiplier, std::max(0, attempt - 1));
  std::mt19937_64 rng(jitter_seed ^ static_cast<std::uint64_t>(attempt));
  std::uniform_real_distribution<double> u(1.0 - jitter, 1.0 + jitter);
  const double delay = std::min(base * u(rng), static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::max(0.0, delay)));
}

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

RateLimiter::RateLimiter(double requests_per_second, double burst)
    : rate_(requests_per_second), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)), last_(Clock::now()) {}

void RateLimiter::acquire() {
  if (rate_ <= 0.0) return;
  for (;;) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mu_);
      const auto now = Clock::now();
      tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

}  // namespace citepref
