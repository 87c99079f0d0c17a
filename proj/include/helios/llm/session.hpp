#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <deque>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

#include "helios/llm/transport.hpp"
#include "helios/llm/wire.hpp"

namespace helios::llm {

// One conversation context with its own budget counters and rate limiter.
// Not thread-safe; use one Session per logical thread.
class Session {
 public:
  using Seconds = std::chrono::duration<double>;
  using Sleeper = std::function<void(Seconds)>;
  using Clock = std::function<Seconds()>;  // monotonic seconds

  Session(ProviderConfig cfg, std::shared_ptr<ChatTransport> transport, Sleeper sleep = {}, Clock clock = {})
      : cfg_(std::move(cfg)), transport_(std::move(transport)), sleep_(std::move(sleep)), clock_(std::move(clock)) {
    cfg_.validate();
    if (!transport_) throw std::invalid_argument("Session needs a transport");
    if (!sleep_) sleep_ = [](Seconds s) { std::this_thread::sleep_for(s); };
    if (!clock_) clock_ = [] { return std::chrono::duration_cast<Seconds>(std::chrono::steady_clock::now().time_since_epoch()); };
  }

  ChatMessage complete(const std::vector<ChatMessage>& messages, const std::vector<ToolSpec>& tools = {},
                       const RequestOptions& opt = {}) {
    if (messages.empty()) throw std::invalid_argument("complete: messages must be non-empty");
    for (const auto& m : messages) m.validate();
    for (const auto& t : tools) t.validate();
    const auto request = build_request(cfg_, messages, tools, opt);

    for (int attempt = 0;; ++attempt) {
      check_budget();
      throttle();
      ++requests_;
      sent_at_.push_back(clock_());

      ProviderReply reply;
      try {
        reply = transport_->post(request);
      } catch (const TransportFailure& e) {
        if (attempt >= cfg_.max_retries) throw ProviderError(std::string(e.what()) + " (after " + std::to_string(attempt + 1) + " attempts)");
        back_off(attempt, std::nullopt);
        continue;
      }
      if (reply.status == 429 || reply.status == 503) {
        if (attempt >= cfg_.max_retries) {
          throw ProviderError("provider still rate limiting after " + std::to_string(attempt + 1) + " attempts", reply.status, reply.body);
        }
        back_off(attempt, reply.retry_after_s);
        continue;
      }
      if (reply.status != 200) throw ProviderError("provider returned HTTP " + std::to_string(reply.status), reply.status, reply.body);
      Completion c = parse_completion(reply.body);
      tokens_ += c.total_tokens;
      return c.message;
    }
  }

  const ProviderConfig& config() const { return cfg_; }
  int requests_sent() const { return requests_; }
  long long tokens_used() const { return tokens_; }
  // Sleeps taken for 429 / transport backoff, in order.
  const std::vector<Seconds>& backoff_delays() const { return backoffs_; }

  // Delay before retry number attempt+1: base * 2^attempt, capped, but never
  // shorter than a server-provided Retry-After.
  Seconds backoff_delay(int attempt, std::optional<double> retry_after_s = std::nullopt) const {
    Seconds d = cfg_.backoff_base * std::pow(2.0, attempt);
    d = std::min(d, cfg_.backoff_cap);
    if (retry_after_s) d = std::max(d, Seconds(*retry_after_s));
    return d;
  }

 private:
  void check_budget() const {
    if (requests_ >= cfg_.max_requests) {
      throw BudgetError("request budget exhausted (" + std::to_string(cfg_.max_requests) + " requests)");
    }
    if (tokens_ >= cfg_.max_total_tokens) {
      throw BudgetError("token budget exhausted (" + std::to_string(tokens_) + " of " + std::to_string(cfg_.max_total_tokens) + ")");
    }
  }

  void throttle() {
    if (cfg_.rate_limit_requests <= 0) return;
    const Seconds window = cfg_.rate_limit_interval;
    while (true) {
      const Seconds now = clock_();
      while (!sent_at_.empty() && now - sent_at_.front() >= window) sent_at_.pop_front();
      if (static_cast<int>(sent_at_.size()) < cfg_.rate_limit_requests) return;
      sleep_(sent_at_.front() + window - now);
    }
  }

  void back_off(int attempt, std::optional<double> retry_after_s) {
    const Seconds d = backoff_delay(attempt, retry_after_s);
    backoffs_.push_back(d);
    sleep_(d);
  }

  ProviderConfig cfg_;
  std::shared_ptr<ChatTransport> transport_;
  Sleeper sleep_;
  Clock clock_;
  int requests_ = 0;
  long long tokens_ = 0;
  std::deque<Seconds> sent_at_;
  std::vector<Seconds> backoffs_;
};

}  // namespace helios::llm
