#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <thread>

#include "helios/detail/httplib.hpp"

#include "helios/service/instrument_service.hpp"

namespace helios::service {

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// httplib front end for an InstrumentService. Listens on its own thread.
class HttpServer {
 public:
  HttpServer(InstrumentService& service, std::string static_dir = {}) : service_(service), static_dir_(std::move(static_dir)) {
    server_.new_task_queue = [] { return new httplib::ThreadPool(64); };
    // httplib's default sets SO_REUSEPORT, which lets a second server share a
    // busy port silently. Plain SO_REUSEADDR makes that a bind error.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    for (const char* path : {"/api", "/gm", "/rgb", "/stats"}) {
      server_.Get(path, [this](const httplib::Request& req, httplib::Response& res) { forward(req, res); });
    }
    if (!static_dir_.empty()) {
      if (!server_.set_mount_point("/", static_dir_)) throw BindError("static directory not found: " + static_dir_);
    } else {
      server_.Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(index_page(), "text/html; charset=utf-8");
      });
    }
  }

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;
  ~HttpServer() { stop(); }

  // Binds (port 0 picks a free port) and starts serving in the background.
  int start(const std::string& host, int port) {
    if (port == 0) {
      port_ = server_.bind_to_any_port(host);
      if (port_ < 0) throw BindError("cannot bind " + host + ":0");
    } else {
      if (!server_.bind_to_port(host, port)) throw BindError("cannot bind " + host + ":" + std::to_string(port) + " (address in use?)");
      port_ = port;
    }
    host_ = host;
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }
  std::string base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

 private:
  void forward(const httplib::Request& req, httplib::Response& res) {
    Request r;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    r.accept = req.get_header_value("Accept");
    r.remote_addr = req.remote_addr;
    r.authorization = req.get_header_value("Authorization");
    const HttpResult out = service_.dispatch(r);
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    res.set_content(out.body, out.content_type);
  }

  InstrumentService& service_;
  std::string static_dir_;
  httplib::Server server_;
  std::thread thread_;
  std::string host_;
  int port_ = -1;
};

}  // namespace helios::service
