#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <future>
#include <thread>

#include "helios/service/instrument_service.hpp"
#include "test_support.hpp"

using namespace helios;
using namespace helios::service;
using helios::testing::TempDir;

namespace {

// Clock that ticks one millisecond per call.
struct TickClock {
  std::shared_ptr<std::atomic<long>> ms = std::make_shared<std::atomic<long>>(0);
  Instant operator()() const {
    return Instant{} + std::chrono::hours(24 * 365 * 56) + std::chrono::milliseconds(ms->fetch_add(1));
  }
};

ServiceConfig config_in(const TempDir& dir) {
  ServiceConfig c;
  c.log_path = dir.file("log.jsonl");
  return c;
}

Request get(std::string path, std::multimap<std::string, std::string> q = {}, std::string addr = "127.0.0.1") {
  Request r;
  r.path = std::move(path);
  r.query = std::move(q);
  r.remote_addr = std::move(addr);
  return r;
}

nlohmann::json body(const HttpResult& r) { return nlohmann::json::parse(r.body); }

std::vector<std::string> lines_of(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(QueryNumber, Accepts) {
  EXPECT_EQ(parse_query_number("R", "0.5"), 0.5);
  EXPECT_EQ(parse_query_number("R", "+0.25"), 0.25);
  EXPECT_EQ(parse_query_number("R", "-1"), -1.0);
  EXPECT_EQ(parse_query_number("R", "1e-3"), 1e-3);
  EXPECT_EQ(parse_query_number("R", "2"), 2.0);
}

TEST(QueryNumber, Rejects) {
  for (const char* bad : {"", "abc", "0.5x", " 0.5", "nan", "NaN", "inf", "-inf", "1e999", "+", "0x10", "1,5"}) {
    EXPECT_THROW(parse_query_number("R", bad), QueryError) << bad;
  }
}

TEST(QueryNumber, FirstOccurrenceWinsAndMissingIsZero) {
  std::multimap<std::string, std::string> q{{"R", "0.2"}, {"R", "0.9"}};
  EXPECT_EQ(query_value(q, "R"), 0.2);
  EXPECT_EQ(query_value(q, "G"), 0.0);
}

TEST(ClientId, MatchesIndependentDigest) {
  // hashlib.sha256(b"helios:127.0.0.1").hexdigest()[:16] etc.
  EXPECT_EQ(client_id("helios", "127.0.0.1"), "5b82cca06a519ac1");
  EXPECT_EQ(client_id("helios", "10.0.0.7"), "98a1a6e7eb348919");
  EXPECT_EQ(client_id("salt2", "127.0.0.1"), "773a7feb53b27f44");
}

TEST(Service, ApiMatchesTheSimulator) {
  TempDir dir;
  const ResponseModel m = noiseless(default_model());
  InstrumentService svc(m, config_in(dir), TickClock{});
  const auto res = svc.dispatch(get("/api", {{"R", "0.2"}, {"G", "0.4"}, {"B", "0.6"}}));
  ASSERT_EQ(res.status, 200);
  EXPECT_EQ(res.content_type, "application/json");
  const auto j = body(res);
  EXPECT_EQ(j["in"]["R"], 0.2);
  EXPECT_EQ(j["in"]["G"], 0.4);
  EXPECT_EQ(j["in"]["B"], 0.6);
  ASSERT_EQ(j["out"].size(), 10u);
  const Eigen::VectorXd want = helios::testing::oracle_counts(m, 0.2, 0.4, 0.6);
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const double e = std::clamp(want(static_cast<Eigen::Index>(c)), 0.0, 65535.0);
    EXPECT_NEAR(j["out"][std::string(kWireNames[c])].get<double>(), e, 0.5 + 1e-9) << kWireNames[c];
  }
}

TEST(Service, InputsClampAndMissingReadAsZero) {
  TempDir dir;
  InstrumentService svc(noiseless(default_model()), config_in(dir), TickClock{});
  auto j = body(svc.dispatch(get("/api", {{"R", "7"}, {"G", "-3"}})));
  EXPECT_EQ(j["in"]["R"], 1.0);
  EXPECT_EQ(j["in"]["G"], 0.0);
  EXPECT_EQ(j["in"]["B"], 0.0);
  j = body(svc.dispatch(get("/api")));
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    EXPECT_EQ(j["out"][std::string(kWireNames[c])].get<int>(), to_count(default_model().dark[c]));
  }
}

TEST(Service, GreenMachineBody) {
  TempDir dir;
  InstrumentService svc(noiseless(default_model()), config_in(dir), TickClock{});
  const auto j = body(svc.dispatch(get("/gm", {{"G", "0.5"}, {"R", "1"}})));
  EXPECT_EQ(j["in"].size(), 1u);
  EXPECT_EQ(j["in"]["G"], 0.5);
  ASSERT_EQ(j["out"].size(), 1u);
  EXPECT_EQ(j["out"]["515nm"].get<int>(), to_count(expected_counts(default_model(), RgbSetting(0, 0.5, 0), Instant{})[3]));
}

TEST(Service, BadParametersAre400AndNotLogged) {
  TempDir dir;
  InstrumentService svc(noiseless(default_model()), config_in(dir), TickClock{});
  for (const char* path : {"/api", "/gm", "/rgb"}) {
    const auto res = svc.dispatch(get(path, {{"G", "nan"}}));
    EXPECT_EQ(res.status, 400) << path;
    EXPECT_TRUE(body(res).contains("error"));
  }
  EXPECT_EQ(svc.dispatch(get("/api", {{"R", "abc"}})).status, 400);
  EXPECT_EQ(svc.dispatch(get("/api", {{"B", ""}})).status, 400);
  EXPECT_EQ(body(svc.dispatch(get("/stats")))["experiments"], 0);
}

TEST(Service, UnknownPathIs404) {
  TempDir dir;
  InstrumentService svc(noiseless(default_model()), config_in(dir), TickClock{});
  EXPECT_EQ(svc.dispatch(get("/nope")).status, 404);
}

TEST(Service, TokenGate) {
  TempDir dir;
  auto c = config_in(dir);
  c.auth_token = "s3cret";
  InstrumentService svc(noiseless(default_model()), c, TickClock{});
  EXPECT_EQ(svc.dispatch(get("/api")).status, 401);
  EXPECT_EQ(svc.dispatch(get("/stats")).status, 401);
  EXPECT_EQ(svc.dispatch(get("/api", {{"token", "wrong"}})).status, 401);
  EXPECT_EQ(svc.dispatch(get("/api", {{"token", "s3cret"}})).status, 200);
  auto r = get("/api");
  r.authorization = "Bearer s3cret";
  EXPECT_EQ(svc.dispatch(r).status, 200);
  r.authorization = "Bearer nope";
  EXPECT_EQ(svc.dispatch(r).status, 401);
}

TEST(Service, HtmlForms) {
  TempDir dir;
  InstrumentService svc(noiseless(default_model()), config_in(dir), TickClock{});
  auto r = get("/rgb");
  r.accept = "text/html,application/xhtml+xml";
  auto res = svc.dispatch(r);
  EXPECT_EQ(res.status, 200);
  EXPECT_NE(res.content_type.find("text/html"), std::string::npos);
  EXPECT_NE(res.body.find("<form"), std::string::npos);
  EXPECT_EQ(body(svc.dispatch(get("/stats")))["experiments"], 0);  // bare form does not measure

  r.query = {{"R", "0.1"}, {"G", "0.2"}, {"B", "0.3"}};
  res = svc.dispatch(r);
  EXPECT_EQ(res.status, 200);
  std::size_t rows = 0;
  for (std::size_t p = res.body.find("<tr><td>"); p != std::string::npos; p = res.body.find("<tr><td>", p + 1)) ++rows;
  EXPECT_EQ(rows, 10u);

  auto g = get("/gm", {{"G", "0.5"}});
  g.accept = "text/html";
  res = svc.dispatch(g);
  EXPECT_NE(res.body.find("id=\"w515\""), std::string::npos);

  g.query = {{"G", "<script>"}};
  res = svc.dispatch(g);
  EXPECT_EQ(res.status, 400);
  EXPECT_EQ(res.body.find("<script>"), std::string::npos);
  EXPECT_NE(res.body.find("&lt;script&gt;"), std::string::npos);
}

TEST(Service, StatsCountExperimentsAndClients) {
  TempDir dir;
  InstrumentService svc(noiseless(default_model()), config_in(dir), TickClock{});
  auto s = body(svc.dispatch(get("/stats")));
  EXPECT_EQ(s["experiments"], 0);
  EXPECT_EQ(s["unique_clients"], 0);
  EXPECT_TRUE(s["since"].is_null());
  svc.dispatch(get("/api", {}, "10.0.0.1"));
  svc.dispatch(get("/gm", {}, "10.0.0.2"));
  svc.dispatch(get("/rgb", {}, "10.0.0.1"));
  s = body(svc.dispatch(get("/stats")));
  EXPECT_EQ(s["experiments"], 3);
  EXPECT_EQ(s["unique_clients"], 2);
  const auto first = nlohmann::json::parse(lines_of(dir.file("log.jsonl")).at(0));
  EXPECT_EQ(s["since"], first["timestamp"]);
}

TEST(Service, LogRecordsEveryMeasurement) {
  TempDir dir;
  InstrumentService svc(default_model(), config_in(dir), TickClock{});
  std::vector<nlohmann::json> replies;
  for (int i = 0; i < 5; ++i) replies.push_back(body(svc.dispatch(get("/api", {{"R", std::to_string(i * 0.2)}}, "1.2.3.4"))));
  const auto lines = lines_of(dir.file("log.jsonl"));
  ASSERT_EQ(lines.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto rec = nlohmann::json::parse(lines[i]);
    EXPECT_EQ(rec["endpoint"], "api");
    EXPECT_EQ(rec["client_id"], client_id("helios", "1.2.3.4"));
    EXPECT_EQ(rec["in"], replies[i]["in"]);
    EXPECT_EQ(rec["out"], replies[i]["out"]);
    EXPECT_EQ(rec["timestamp"].get<std::string>().size(), 27u);
  }
}

TEST(Service, ReplayAfterRestartGivesTheSameStats) {
  TempDir dir;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    nlohmann::json before;
    {
      InstrumentService svc(noiseless(default_model()), config_in(dir), TickClock{});
      const int n = 1 + static_cast<int>(rng() % 20);
      for (int i = 0; i < n; ++i) svc.dispatch(get("/api", {}, "10.0.0." + std::to_string(rng() % 4)));
      before = body(svc.dispatch(get("/stats")));
    }
    InstrumentService again(noiseless(default_model()), config_in(dir), TickClock{});
    EXPECT_EQ(body(again.dispatch(get("/stats"))), before);
    EXPECT_EQ(nlohmann::json::parse(to_json(compute_stats(dir.file("log.jsonl"))).dump()), before);
  }
}

TEST(ExperimentLogTest, TimestampsNeverGoBackwards) {
  TempDir dir;
  ExperimentLog log(dir.file("log.jsonl"), 1 << 20);
  const Instant t0 = Instant{} + std::chrono::hours(500000);
  ExperimentRecord r{t0, "a", "api", RgbSetting{}, Reading{}};
  log.append(r);
  r.timestamp = t0 - std::chrono::seconds(10);  // clock stepped back
  const auto written = log.append(r);
  EXPECT_EQ(written.timestamp, t0);
  Instant last{};
  replay_log(dir.file("log.jsonl"), [&](const ExperimentRecord& rec) {
    EXPECT_GE(rec.timestamp, last);
    last = rec.timestamp;
  });
}

TEST(ExperimentLogTest, RotationKeepsEverythingInOrder) {
  TempDir dir;
  const std::string path = dir.file("log.jsonl");
  std::vector<std::string> ids;
  {
    ExperimentLog log(path, 600);  // roughly two records per segment
    for (int i = 0; i < 25; ++i) {
      ids.push_back("c" + std::to_string(i));
      log.append({Instant{} + std::chrono::seconds(i), ids.back(), "api", RgbSetting{}, Reading{}});
    }
    EXPECT_EQ(log.stats().experiments, 25u);
  }
  const auto segs = log_segments(path);
  EXPECT_GE(segs.size(), 5u);
  for (std::size_t k = 0; k + 1 < segs.size(); ++k) EXPECT_EQ(segs[k].string(), path + "." + std::to_string(k + 1));
  EXPECT_EQ(segs.back().string(), path);
  std::vector<std::string> seen;
  replay_log(path, [&](const ExperimentRecord& r) { seen.push_back(r.client_id); });
  EXPECT_EQ(seen, ids);

  // a reopened log keeps numbering after the existing segments
  {
    ExperimentLog log(path, 600);
    EXPECT_EQ(log.stats().experiments, 25u);
    for (int i = 0; i < 5; ++i) log.append({Instant{} + std::chrono::seconds(100 + i), "late", "api", RgbSetting{}, Reading{}});
  }
  EXPECT_EQ(compute_stats(path).experiments, 30u);
  EXPECT_GT(log_segments(path).size(), segs.size());
}

TEST(ExperimentLogTest, TornFinalLineIsSkipped) {
  TempDir dir;
  const std::string path = dir.file("log.jsonl");
  {
    ExperimentLog log(path, 1 << 20);
    log.append({Instant{} + std::chrono::seconds(1), "a", "api", RgbSetting{}, Reading{}});
  }
  std::ofstream(path, std::ios::app) << "{\"timestamp\": \"2026-";
  EXPECT_EQ(compute_stats(path).experiments, 1u);
}

TEST(ExperimentLogTest, CorruptMiddleLineSurfacesAs500) {
  TempDir dir;
  const std::string path = dir.file("log.jsonl");
  std::ofstream(path) << "not json\n";
  EXPECT_THROW(compute_stats(path), LogError);
  InstrumentService svc(noiseless(default_model()), config_in(dir), TickClock{});
  EXPECT_EQ(svc.dispatch(get("/stats")).status, 500);
}

TEST(ExperimentLogTest, RecordRoundTrip) {
  ExperimentRecord r{Instant{} + std::chrono::microseconds(1790000000123456LL), "abc", "rgb", RgbSetting(0.1, 0.2, 0.3), Reading{}};
  for (std::size_t c = 0; c < kChannelCount; ++c) r.out.counts[c] = static_cast<std::uint16_t>(c * 1000 + 7);
  const auto back = record_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(back.timestamp, r.timestamp);
  EXPECT_EQ(back.client_id, "abc");
  EXPECT_EQ(back.endpoint, "rgb");
  EXPECT_EQ(back.in, r.in);
  EXPECT_EQ(back.out.counts, r.out.counts);
  EXPECT_EQ(format_timestamp(r.timestamp), "2026-09-21T14:13:20.123456Z");
}

TEST(Queue, RunsOneAtATimeInArrivalOrder) {
  MeasurementQueue q(MeasurementQueue::Seconds(0), MeasurementQueue::Seconds(10));
  std::promise<void> release;
  auto gate = release.get_future().share();
  std::vector<int> order;
  auto first = std::async(std::launch::async, [&] { q.run([&] { gate.wait(); order.push_back(0); return 0; }); });
  while (q.waiting() != 0 || q.completed() != 0) std::this_thread::yield();
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  auto second = std::async(std::launch::async, [&] { q.run([&] { order.push_back(1); return 0; }); });
  while (q.waiting() < 1) std::this_thread::yield();
  auto third = std::async(std::launch::async, [&] { q.run([&] { order.push_back(2); return 0; }); });
  while (q.waiting() < 2) std::this_thread::yield();
  release.set_value();
  first.get();
  second.get();
  third.get();
  EXPECT_EQ(order, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(q.completed(), 3u);
}

TEST(Queue, LatencySpacesConsecutiveMeasurements) {
  MeasurementQueue q(MeasurementQueue::Seconds(0.05), MeasurementQueue::Seconds(10));
  std::mutex mu;
  std::vector<std::chrono::steady_clock::time_point> stamps;
  std::atomic<int> inside{0}, max_inside{0};
  std::vector<std::thread> ts;
  for (int i = 0; i < 5; ++i) {
    ts.emplace_back([&] {
      q.run([&] {
        max_inside = std::max(max_inside.load(), ++inside);
        {
          std::lock_guard g(mu);
          stamps.push_back(std::chrono::steady_clock::now());
        }
        --inside;
        return 0;
      });
    });
  }
  for (auto& t : ts) t.join();
  EXPECT_EQ(max_inside.load(), 1);
  std::sort(stamps.begin(), stamps.end());
  for (std::size_t i = 1; i < stamps.size(); ++i) EXPECT_GE(stamps[i] - stamps[i - 1], std::chrono::milliseconds(49));
}

TEST(Queue, TimeoutReportsRetryAfter) {
  MeasurementQueue q(MeasurementQueue::Seconds(0.3), MeasurementQueue::Seconds(0));
  auto busy = std::async(std::launch::async, [&] { return q.run([] { return 1; }); });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  try {
    q.run([] { return 2; });
    FAIL() << "expected QueueTimeout";
  } catch (const QueueTimeout& e) {
    EXPECT_EQ(e.retry_after_s(), 1);  // ceil(0.3 * 2)
  }
  EXPECT_EQ(busy.get(), 1);
  EXPECT_EQ(q.waiting(), 0u);
}

TEST(Queue, ExceptionsReleaseTheInstrument) {
  MeasurementQueue q(MeasurementQueue::Seconds(0), MeasurementQueue::Seconds(1));
  EXPECT_THROW(q.run([]() -> int { throw std::runtime_error("boom"); }), std::runtime_error);
  EXPECT_EQ(q.run([] { return 5; }), 5);
}

TEST(Service, BusyInstrumentAnswers503WithRetryAfter) {
  TempDir dir;
  auto c = config_in(dir);
  c.latency_s = 0.4;
  c.queue_timeout_s = 0.0;
  InstrumentService svc(noiseless(default_model()), c, TickClock{});
  auto slow = std::async(std::launch::async, [&] { return svc.dispatch(get("/api")); });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  const auto res = svc.dispatch(get("/api"));
  EXPECT_EQ(res.status, 503);
  ASSERT_EQ(res.headers.size(), 1u);
  EXPECT_EQ(res.headers[0].first, "Retry-After");
  EXPECT_GE(std::stoi(res.headers[0].second), 1);
  EXPECT_EQ(slow.get().status, 200);
  EXPECT_EQ(body(svc.dispatch(get("/stats")))["experiments"], 1);
}

TEST(Config, JsonAndEnvLayers) {
  ServiceConfig c;
  apply_json(c, nlohmann::json::parse(R"({"service": {"port": 9000, "latency_s": 1.5, "seed": 7, "daylight": true}})"));
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(c.latency_s, 1.5);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_TRUE(c.daylight);
  apply_json(c, nlohmann::json::parse(R"({"host": "0.0.0.0"})"));
  EXPECT_EQ(c.host, "0.0.0.0");
  std::map<std::string, std::string> env{{"HELIOS_PORT", "9100"}, {"HELIOS_LATENCY", "0.25"}, {"HELIOS_DAYLIGHT", "off"}};
  apply_env(c, [&](const char* k) -> std::optional<std::string> {
    auto it = env.find(k);
    return it == env.end() ? std::nullopt : std::optional(it->second);
  });
  EXPECT_EQ(c.port, 9100);
  EXPECT_EQ(c.latency_s, 0.25);
  EXPECT_FALSE(c.daylight);
  EXPECT_EQ(c.seed, 7u);
}

TEST(Config, Rejections) {
  ServiceConfig c;
  EXPECT_THROW(apply_json(c, nlohmann::json::parse(R"({"port": "eighty"})")), ConfigError);
  EXPECT_THROW(apply_json(c, nlohmann::json::parse("[1]")), ConfigError);
  auto env_of = [](std::string k, std::string v) {
    return [k, v](const char* name) -> std::optional<std::string> { return name == k ? std::optional(v) : std::nullopt; };
  };
  EXPECT_THROW(apply_env(c, env_of("HELIOS_PORT", "-1")), ConfigError);
  EXPECT_THROW(apply_env(c, env_of("HELIOS_LATENCY", "1s")), ConfigError);
  EXPECT_THROW(apply_env(c, env_of("HELIOS_DAYLIGHT", "maybe")), ConfigError);
  c = ServiceConfig{};
  c.latency_s = -1;
  EXPECT_THROW(validate(c), ConfigError);
  c = ServiceConfig{};
  c.port = 70000;
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_THROW(read_config_file("/nonexistent/helios.json"), ConfigError);
}

TEST(Config, ModelForAppliesOverrides) {
  TempDir dir;
  ServiceConfig c;
  c.seed = 99;
  EXPECT_EQ(model_for(c).seed, 99u);
  ResponseModel m = default_model();
  m.noise_std[0] = 5;
  save_calibration(m, dir.file("cal.json"));
  c.calibration_path = dir.file("cal.json");
  EXPECT_EQ(model_for(c).noise_std[0], 5.0);
  c.calibration_path = dir.file("missing.json");
  EXPECT_ANY_THROW(model_for(c));
}
