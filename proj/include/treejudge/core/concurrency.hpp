#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "treejudge/core/error.hpp"

namespace treejudge {

// Global in-flight cap shared by model calls and page fetches. Holders must
// never acquire a second slot while holding one.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(std::size_t capacity) : available_(capacity), capacity_(capacity) {
    if (capacity == 0) throw ConfigError("concurrency cap must be >= 1");
  }

  ConcurrencyLimiter(const ConcurrencyLimiter&) = delete;
  ConcurrencyLimiter& operator=(const ConcurrencyLimiter&) = delete;

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }

  void release() {
    {
      std::lock_guard lock(mu_);
      ++available_;
    }
    cv_.notify_one();
  }

  std::size_t capacity() const { return capacity_; }

  class Slot {
   public:
    explicit Slot(ConcurrencyLimiter* limiter) : limiter_(limiter) {
      if (limiter_) limiter_->acquire();
    }
    ~Slot() {
      if (limiter_) limiter_->release();
    }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    ConcurrencyLimiter* limiter_;
  };

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t available_;
  std::size_t capacity_;
};

// Coalesces concurrent calls for the same key onto one execution.
template <typename T>
class SingleFlight {
 public:
  T run(const std::string& key, const std::function<T()>& fn) {
    std::shared_future<T> fut;
    std::shared_ptr<std::promise<T>> owner;
    {
      std::lock_guard lock(mu_);
      auto it = inflight_.find(key);
      if (it != inflight_.end()) {
        fut = it->second;
      } else {
        owner = std::make_shared<std::promise<T>>();
        fut = owner->get_future().share();
        inflight_.emplace(key, fut);
      }
    }
    if (owner) {
      try {
        owner->set_value(fn());
      } catch (...) {
        owner->set_exception(std::current_exception());
      }
      std::lock_guard lock(mu_);
      inflight_.erase(key);
    }
    return fut.get();
  }

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_future<T>> inflight_;
};

}  // namespace treejudge
