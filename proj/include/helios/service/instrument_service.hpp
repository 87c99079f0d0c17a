#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "helios/service/client_id.hpp"
#include "helios/service/config.hpp"
#include "helios/service/experiment_log.hpp"
#include "helios/service/html.hpp"
#include "helios/service/measurement_queue.hpp"
#include "helios/service/wire.hpp"
#include "helios/sim/calibration.hpp"
#include "helios/sim/calibration_io.hpp"

namespace helios::service {

struct Request {
  std::string path;
  std::multimap<std::string, std::string> query;
  std::string accept;
  std::string remote_addr = "127.0.0.1";
  std::string authorization;
};

struct HttpResult {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  std::vector<std::pair<std::string, std::string>> headers;
};

class QueryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Decimal real, optional sign; the whole string must be consumed and the
// value must be finite. Range clamping is the simulator's job.
inline double parse_query_number(const std::string& key, const std::string& text) {
  std::string_view s = text;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw QueryError("parameter " + key + " is not a finite decimal number: '" + text + "'");
  }
  return v;
}

// First occurrence wins; missing keys read as 0.
inline double query_value(const std::multimap<std::string, std::string>& q, const std::string& key) {
  const auto it = q.find(key);
  return it == q.end() ? 0.0 : parse_query_number(key, it->second);
}

inline bool wants_html(const std::string& accept) { return accept.find("text/html") != std::string::npos; }

// Builds the simulator model a service config describes.
inline ResponseModel model_for(const ServiceConfig& c) {
  ResponseModel m = c.calibration_path.empty() ? default_model() : load_calibration(c.calibration_path);
  if (c.seed) m.seed = *c.seed;
  if (c.daylight) m.ambient = daylight_ambient();
  m.validate();
  return m;
}

// Transport-independent request handling. Every measurement goes through one
// FIFO queue guarding the noise stream and the log append.
class InstrumentService {
 public:
  using Clock = std::function<Instant()>;

  InstrumentService(ResponseModel model, const ServiceConfig& config, Clock clock = {})
      : model_(std::move(model)),
        config_(config),
        clock_(clock ? std::move(clock) : Clock([] { return std::chrono::system_clock::now(); })),
        noise_(model_.seed),
        queue_(MeasurementQueue::Seconds(config.latency_s), MeasurementQueue::Seconds(config.queue_timeout_s)),
        log_(config.log_path, config.log_max_bytes) {
    model_.validate();
    validate(config_);
  }

  HttpResult dispatch(const Request& req) {
    if (!authorized(req)) return json_result(401, error_body("missing or invalid token"));
    if (req.path == "/api") return handle_api(req);
    if (req.path == "/gm") return handle_gm(req);
    if (req.path == "/rgb") return handle_rgb(req);
    if (req.path == "/stats") return handle_stats();
    return json_result(404, error_body("no such endpoint: " + req.path));
  }

  HttpResult handle_api(const Request& req) {
    RgbSetting x;
    try {
      x = RgbSetting(query_value(req.query, "R"), query_value(req.query, "G"), query_value(req.query, "B"));
    } catch (const QueryError& e) {
      return json_result(400, error_body(e.what()));
    }
    return with_measurement(req, "api", x, [&](const Reading& r) { return json_result(200, api_body(x, r)); });
  }

  HttpResult handle_gm(const Request& req) {
    const bool html = wants_html(req.accept);
    RgbSetting x;
    try {
      x = RgbSetting(0.0, query_value(req.query, "G"), 0.0);
    } catch (const QueryError& e) {
      if (html) return html_result(400, gm_page(std::nullopt, std::nullopt, e.what()));
      return json_result(400, error_body(e.what()));
    }
    if (html && req.query.empty()) return html_result(200, gm_page(std::nullopt, std::nullopt, {}));
    return with_measurement(req, "gm", x, [&](const Reading& r) {
      if (html) return html_result(200, gm_page(x, r, {}));
      return json_result(200, gm_body(x, r));
    });
  }

  HttpResult handle_rgb(const Request& req) {
    const bool html = wants_html(req.accept);
    RgbSetting x;
    try {
      x = RgbSetting(query_value(req.query, "R"), query_value(req.query, "G"), query_value(req.query, "B"));
    } catch (const QueryError& e) {
      if (html) return html_result(400, rgb_page(std::nullopt, std::nullopt, e.what()));
      return json_result(400, error_body(e.what()));
    }
    if (html && req.query.empty()) return html_result(200, rgb_page(std::nullopt, std::nullopt, {}));
    return with_measurement(req, "rgb", x, [&](const Reading& r) {
      if (html) return html_result(200, rgb_page(x, r, {}));
      return json_result(200, api_body(x, r));
    });
  }

  HttpResult handle_stats() const {
    try {
      return json_result(200, to_json(log_.stats()));
    } catch (const LogError& e) {
      return json_result(500, error_body(std::string("experiment log unreadable: ") + e.what()));
    }
  }

  const ResponseModel& model() const { return model_; }
  const ServiceConfig& config() const { return config_; }
  const MeasurementQueue& queue() const { return queue_; }
  const ExperimentLog& log() const { return log_; }

 private:
  static HttpResult json_result(int status, const Json& body) { return HttpResult{status, body.dump(), "application/json", {}}; }
  static HttpResult html_result(int status, std::string body) { return HttpResult{status, std::move(body), "text/html; charset=utf-8", {}}; }

  bool authorized(const Request& req) const {
    if (config_.auth_token.empty()) return true;
    if (req.authorization == "Bearer " + config_.auth_token) return true;
    const auto it = req.query.find("token");
    return it != req.query.end() && it->second == config_.auth_token;
  }

  template <class Render>
  HttpResult with_measurement(const Request& req, const char* endpoint, const RgbSetting& x, Render&& render) {
    const std::string who = client_id(config_.client_salt, req.remote_addr);
    try {
      const Reading r = queue_.run([&] {
        const Instant now = clock_();
        Reading reading = measure(model_, x, now, noise_);
        const ExperimentRecord written = log_.append(ExperimentRecord{now, who, endpoint, x, reading});
        reading.timestamp = written.timestamp;
        return reading;
      });
      return render(r);
    } catch (const QueueTimeout& e) {
      HttpResult res = json_result(503, error_body(e.what()));
      res.headers.emplace_back("Retry-After", std::to_string(e.retry_after_s()));
      return res;
    } catch (const LogError& e) {
      return json_result(500, error_body(std::string("experiment log write failed: ") + e.what()));
    } catch (const std::filesystem::filesystem_error& e) {
      return json_result(500, error_body(std::string("experiment log write failed: ") + e.what()));
    }
  }

  ResponseModel model_;
  ServiceConfig config_;
  Clock clock_;
  NoiseStream noise_;  // touched only inside the queue
  MeasurementQueue queue_;
  ExperimentLog log_;
};

}  // namespace helios::service
