#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "helios/service/wire.hpp"

namespace helios::service {

class LogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentRecord {
  Instant timestamp;
  std::string client_id;
  std::string endpoint;  // api | gm | rgb
  RgbSetting in;
  Reading out;
};

inline Json to_json(const ExperimentRecord& r) {
  return Json{{"timestamp", format_timestamp(r.timestamp)},
              {"client_id", r.client_id},
              {"endpoint", r.endpoint},
              {"in", rgb_to_json(r.in)},
              {"out", counts_to_json(r.out)}};
}

inline ExperimentRecord record_from_json(const nlohmann::json& j) {
  ExperimentRecord r;
  try {
    const auto ts = parse_timestamp(j.at("timestamp").get<std::string>());
    if (!ts) throw LogError("bad timestamp");
    r.timestamp = *ts;
    r.client_id = j.at("client_id").get<std::string>();
    r.endpoint = j.at("endpoint").get<std::string>();
    const auto& in = j.at("in");
    r.in = RgbSetting(in.at("R").get<double>(), in.at("G").get<double>(), in.at("B").get<double>());
    const auto& out = j.at("out");
    if (out.size() != kChannelCount) throw LogError("record must carry all 10 channels");
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const auto v = out.at(std::string(kWireNames[c])).get<std::int64_t>();
      if (v < 0 || v > kMaxCount) throw LogError("count out of range");
      r.out.counts[c] = static_cast<std::uint16_t>(v);
    }
    r.out.timestamp = r.timestamp;
  } catch (const nlohmann::json::exception& e) {
    throw LogError(std::string("malformed experiment record: ") + e.what());
  }
  return r;
}

struct Stats {
  std::uint64_t experiments = 0;
  std::uint64_t unique_clients = 0;
  std::optional<std::string> since;
};

inline Json to_json(const Stats& s) {
  Json j{{"experiments", s.experiments}, {"unique_clients", s.unique_clients}};
  j["since"] = s.since ? Json(*s.since) : Json(nullptr);
  return j;
}

// Rotated segments are named <path>.1, <path>.2, ... in the order they were
// closed; the live file is always <path>. Nothing is ever deleted.
inline std::vector<std::filesystem::path> log_segments(const std::filesystem::path& live) {
  std::vector<std::filesystem::path> out;
  for (int k = 1;; ++k) {
    std::filesystem::path p = live;
    p += "." + std::to_string(k);
    if (!std::filesystem::exists(p)) break;
    out.push_back(p);
  }
  if (std::filesystem::exists(live)) out.push_back(live);
  return out;
}

// Calls fn on every complete record in every segment, oldest first. A final
// line without its newline (torn write) is skipped; anything else malformed
// is an error.
template <class Fn>
void replay_log(const std::filesystem::path& live, Fn&& fn) {
  for (const auto& seg : log_segments(live)) {
    std::ifstream in(seg, std::ios::binary);
    if (!in) throw LogError("cannot read log segment " + seg.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
      const std::size_t nl = content.find('\n', pos);
      if (nl == std::string::npos) break;
      ++line_no;
      const std::string line = content.substr(pos, nl - pos);
      pos = nl + 1;
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        throw LogError(seg.string() + ":" + std::to_string(line_no) + ": not valid JSON");
      }
      fn(record_from_json(j));
    }
  }
}

inline Stats compute_stats(const std::filesystem::path& live) {
  Stats s;
  std::set<std::string> clients;
  replay_log(live, [&](const ExperimentRecord& r) {
    if (!s.since) s.since = format_timestamp(r.timestamp);
    ++s.experiments;
    clients.insert(r.client_id);
  });
  s.unique_clients = clients.size();
  return s;
}

// Append-only JSONL writer with size-based rotation and running stats.
class ExperimentLog {
 public:
  ExperimentLog(std::filesystem::path path, std::uint64_t max_bytes) : path_(std::move(path)), max_bytes_(max_bytes) {
    if (max_bytes_ == 0) throw LogError("log max_bytes must be > 0");
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    try {
      replay_log(path_, [&](const ExperimentRecord& r) {
        if (!stats_.since) stats_.since = format_timestamp(r.timestamp);
        ++stats_.experiments;
        clients_.insert(r.client_id);
        last_ = std::max(last_, r.timestamp);
      });
      stats_.unique_clients = clients_.size();
    } catch (const LogError& e) {
      replay_error_ = e.what();
    }
    open();
  }

  // Writes one line; the stored timestamp is max(previous, r.timestamp) so a
  // file never goes backwards in time. Returns the record as written.
  ExperimentRecord append(ExperimentRecord r) {
    std::lock_guard lock(write_mu_);
    r.timestamp = std::max(last_, r.timestamp);
    const std::string line = to_json(r).dump() + "\n";
    if (bytes_ > 0 && bytes_ + line.size() > max_bytes_) rotate();
    out_ << line;
    out_.flush();
    if (!out_) throw LogError("write to " + path_.string() + " failed");
    bytes_ += line.size();
    last_ = r.timestamp;

    std::lock_guard slock(stats_mu_);
    if (!stats_.since) stats_.since = format_timestamp(r.timestamp);
    ++stats_.experiments;
    clients_.insert(r.client_id);
    stats_.unique_clients = clients_.size();
    return r;
  }

  // Throws LogError if the log could not be replayed at startup.
  Stats stats() const {
    if (replay_error_) throw LogError(*replay_error_);
    std::lock_guard slock(stats_mu_);
    return stats_;
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  void open() {
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw LogError("cannot open experiment log " + path_.string());
    bytes_ = std::filesystem::file_size(path_);
  }

  void rotate() {
    out_.close();
    // numbering continues after whatever segments already exist
    int k = 1;
    for (;; ++k) {
      std::filesystem::path p = path_;
      p += "." + std::to_string(k);
      if (!std::filesystem::exists(p)) break;
    }
    std::filesystem::path target = path_;
    target += "." + std::to_string(k);
    std::filesystem::rename(path_, target);
    open();
  }

  std::filesystem::path path_;
  std::uint64_t max_bytes_;
  std::ofstream out_;
  std::uint64_t bytes_ = 0;
  Instant last_{};
  std::optional<std::string> replay_error_;

  std::mutex write_mu_;
  mutable std::mutex stats_mu_;
  Stats stats_;
  std::set<std::string> clients_;
};

}  // namespace helios::service
