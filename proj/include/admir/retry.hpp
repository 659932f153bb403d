#pragma once

#include <chrono>
#include <functional>
#include <thread>

namespace admir::backend {

/// Exponential backoff: delay before retry k is base_delay * growth^k,
/// clamped to max_delay. The delay sequence is nondecreasing (growth >= 1).
struct RetryPolicy {
  int max_retries = 8;
  std::chrono::milliseconds base_delay{100};
  double growth = 2.0;
  std::chrono::milliseconds max_delay{30'000};

  std::chrono::milliseconds delay_for(int retry_index) const {
    double ms = static_cast<double>(base_delay.count());
    for (int i = 0; i < retry_index; ++i) ms *= growth;
    const double cap = static_cast<double>(max_delay.count());
    return std::chrono::milliseconds(static_cast<long long>(ms > cap ? cap : ms));
  }
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

inline void default_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

/// True for errors worth retrying (transient transport failures).
/// Specialised via BackendError::retryable(); anything else propagates.
bool is_retryable(const std::exception& e);

/// Runs `action` up to 1 + max_retries times. Non-retryable errors propagate
/// immediately; the last retryable error propagates after exhaustion.
template <typename F>
auto with_retry(F&& action, const RetryPolicy& policy, const SleepFn& sleep = default_sleep)
    -> decltype(action()) {
  int attempt = 0;
  for (;;) {
    try {
      return action();
    } catch (const std::exception& e) {
      if (!is_retryable(e) || attempt >= policy.max_retries) throw;
      sleep(policy.delay_for(attempt));
      ++attempt;
    }
  }
}

}  // namespace admir::backend
