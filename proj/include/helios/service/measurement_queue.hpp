#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace helios::service {

class QueueTimeout : public std::runtime_error {
 public:
  QueueTimeout(const std::string& what, int retry_after_s) : std::runtime_error(what), retry_after_s_(retry_after_s) {}
  int retry_after_s() const { return retry_after_s_; }

 private:
  int retry_after_s_;
};

// Strict FIFO serializer for instrument access. Each caller takes a ticket;
// the head ticket runs once the instrument is idle. The artificial latency is
// spent while holding the instrument, as a real measurement would.
class MeasurementQueue {
 public:
  using Seconds = std::chrono::duration<double>;
  using SleepFn = std::function<void(Seconds)>;

  MeasurementQueue(Seconds latency, Seconds timeout, SleepFn sleep = {})
      : latency_(latency), timeout_(timeout), sleep_(std::move(sleep)) {
    if (latency_.count() < 0 || timeout_.count() < 0) throw std::invalid_argument("MeasurementQueue: negative duration");
    if (!sleep_) sleep_ = [](Seconds s) { std::this_thread::sleep_for(s); };
  }

  template <class Fn>
  auto run(Fn&& fn) -> decltype(fn()) {
    std::unique_lock lock(mu_);
    const std::uint64_t ticket = next_ticket_++;
    waiting_.push_back(ticket);
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration_cast<std::chrono::steady_clock::duration>(timeout_);
    const bool ready = cv_.wait_until(lock, deadline, [&] { return !busy_ && waiting_.front() == ticket; });
    if (!ready) {
      std::erase(waiting_, ticket);
      const std::size_t ahead = waiting_.size() + (busy_ ? 1 : 0);
      cv_.notify_all();
      throw QueueTimeout("instrument busy: queue wait exceeded timeout", retry_after(ahead));
    }
    waiting_.pop_front();
    busy_ = true;
    lock.unlock();

    struct Release {
      MeasurementQueue* q;
      ~Release() {
        {
          std::lock_guard g(q->mu_);
          q->busy_ = false;
          ++q->completed_;
        }
        q->cv_.notify_all();
      }
    } release{this};

    if (latency_.count() > 0) sleep_(latency_);
    return fn();
  }

  std::size_t waiting() const {
    std::lock_guard g(mu_);
    return waiting_.size();
  }
  std::uint64_t completed() const {
    std::lock_guard g(mu_);
    return completed_;
  }
  Seconds latency() const { return latency_; }

 private:
  int retry_after(std::size_t ahead) const {
    return static_cast<int>(std::max(1.0, std::ceil(latency_.count() * static_cast<double>(ahead + 1))));
  }

  Seconds latency_;
  Seconds timeout_;
  SleepFn sleep_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::uint64_t> waiting_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t completed_ = 0;
  bool busy_ = false;
};

}  // namespace helios::service
