#pragma once

#include <chrono>
#include <string>
#include <thread>

#include <spdlog/spdlog.h>

#include "treejudge/core/error.hpp"

namespace treejudge {

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

// Runs fn, retrying on TransportError with exponential backoff. Exhausting
// the attempts escalates to EvaluationError.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, const std::string& what, Fn&& fn) -> decltype(fn()) {
  auto backoff = policy.initial_backoff;
  std::string last;
  for (int attempt = 1; attempt <= policy.attempts; ++attempt) {
    try {
      return fn();
    } catch (const TransportError& e) {
      last = e.what();
      spdlog::warn("{}: attempt {}/{} failed: {}", what, attempt, policy.attempts, last);
    }
    if (attempt < policy.attempts && backoff.count() > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * policy.multiplier));
    }
  }
  throw EvaluationError(what + ": failed after " + std::to_string(policy.attempts) +
                        " attempts: " + last);
}

}  // namespace treejudge
