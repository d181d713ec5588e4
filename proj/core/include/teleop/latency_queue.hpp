#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <utility>

namespace teleop::sim {

/// FIFO realizing a fixed delay measured in ticks: an item pushed at tick t
/// becomes due at tick t + delay. Safe for one producer and one consumer.
template <typename T>
class LatencyQueue {
 public:
  explicit LatencyQueue(int delay_ticks = 0) : delay_(delay_ticks) {}

  LatencyQueue(const LatencyQueue& other) {
    std::lock_guard lock(other.mutex_);
    delay_ = other.delay_;
    items_ = other.items_;
  }

  LatencyQueue& operator=(const LatencyQueue& other) {
    if (this != &other) {
      std::scoped_lock lock(mutex_, other.mutex_);
      delay_ = other.delay_;
      items_ = other.items_;
    }
    return *this;
  }

  int delay() const { return delay_; }

  void push(std::int64_t tick, T value) {
    std::lock_guard lock(mutex_);
    items_.emplace_back(tick, std::move(value));
  }

  /// Removes every item due at `now` and returns the newest of them.
  std::optional<T> pop_due(std::int64_t now) {
    std::lock_guard lock(mutex_);
    std::optional<T> out;
    while (!items_.empty() && items_.front().first + delay_ <= now) {
      out = std::move(items_.front().second);
      items_.pop_front();
    }
    return out;
  }

  /// Removes every item due at `now`, oldest first.
  template <typename F>
  void drain_due(std::int64_t now, F&& f) {
    std::lock_guard lock(mutex_);
    while (!items_.empty() && items_.front().first + delay_ <= now) {
      f(std::move(items_.front().second));
      items_.pop_front();
    }
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }

  void clear() {
    std::lock_guard lock(mutex_);
    items_.clear();
  }

 private:
  int delay_;
  mutable std::mutex mutex_;
  std::deque<std::pair<std::int64_t, T>> items_;
};

}  // namespace teleop::sim
