#include <gtest/gtest.h>

#include "helios/client/client.hpp"
#include "helios/service/http_server.hpp"
#include "test_support.hpp"

using namespace helios;
using namespace helios::client;

namespace {

std::string full_body() {
  nlohmann::ordered_json out;
  for (std::size_t c = 0; c < kChannelCount; ++c) out[std::string(kWireNames[c])] = 100 * (c + 1);
  return nlohmann::ordered_json{{"in", {{"R", 0}, {"G", 0}, {"B", 0}}}, {"out", out}}.dump();
}

struct Recorder {
  std::vector<std::string> paths;
  std::vector<HttpReply> script;
  std::size_t next = 0;
  Transport transport() {
    return [this](const std::string& p) {
      paths.push_back(p);
      if (next >= script.size()) throw TransportError("stub exhausted");
      const HttpReply r = script[next++];
      if (r.status == 0) throw TransportError("connection refused");
      return r;
    };
  }
};

ClientConfig fast_config(std::vector<double>* sleeps = nullptr) {
  ClientConfig c;
  c.retries = 2;
  c.sleep = [sleeps](std::chrono::duration<double> d) {
    if (sleeps) sleeps->push_back(d.count());
  };
  return c;
}

}  // namespace

TEST(Catalog, FourInstrumentsWithTheirChannels) {
  const auto& t = instrument_table();
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(info("GreenMachine1").outputs, std::vector<Channel>{Channel::W515});
  EXPECT_EQ(info("GreenMachine3").outputs, (std::vector<Channel>{Channel::W480, Channel::W515, Channel::W555}));
  EXPECT_EQ(info("CLRGB").outputs, (std::vector<Channel>{Channel::W630, Channel::W515, Channel::W445}));
  EXPECT_EQ(info("CLLight").outputs.size(), 10u);
  EXPECT_EQ(info("CLRGB").inputs, (std::vector<char>{'R', 'G', 'B'}));
  EXPECT_THROW(info("Spectro9000"), std::invalid_argument);
  for (const auto& e : instrument_catalog()) {
    EXPECT_EQ(e.description.rfind(e.name + ":", 0), 0u) << e.name;
    for (Channel c : info(e.name).outputs) EXPECT_NE(e.description.find(wire_name(c)), std::string::npos) << e.name;
  }
}

TEST(Instrument, ProjectsInCatalogOrder) {
  Recorder rec;
  rec.script = {{200, full_body()}, {200, full_body()}, {200, full_body()}, {200, full_body()}};
  EXPECT_EQ(Instrument(InstrumentKind::CLRGB, fast_config(), rec.transport())(0.1, 0.2, 0.3), (std::vector<int>{700, 400, 200}));
  EXPECT_EQ(Instrument(InstrumentKind::GreenMachine1, fast_config(), rec.transport())(0.9, 0.5, 0.9), std::vector<int>{400});
  EXPECT_EQ(Instrument(InstrumentKind::GreenMachine3, fast_config(), rec.transport())(0, 0.5), (std::vector<int>{300, 400, 500}));
  const auto all = Instrument(InstrumentKind::CLLight, fast_config(), rec.transport())(1, 1, 1);
  EXPECT_EQ(all.size(), 10u);
  EXPECT_EQ(all.back(), 1000);
  EXPECT_EQ(rec.paths[0], "/api?R=0.1&G=0.2&B=0.3");
  EXPECT_EQ(rec.paths[1], "/api?R=0&G=0.5&B=0");  // unused inputs go out as 0
}

TEST(Instrument, RetriesBusyWithExponentialBackoff) {
  Recorder rec;
  rec.script = {{503, "{}"}, {0, ""}, {200, full_body()}};
  std::vector<double> sleeps;
  Instrument gm(InstrumentKind::GreenMachine1, fast_config(&sleeps), rec.transport());
  EXPECT_EQ(gm(0, 0.5), std::vector<int>{400});
  EXPECT_EQ(sleeps, (std::vector<double>{0.25, 0.5}));
  EXPECT_EQ(gm.backoff_delay(3).count(), 2.0);
}

TEST(Instrument, GivesUpAfterTheLastRetry) {
  Recorder rec;
  rec.script = {{503, "busy"}, {503, "busy"}, {503, "busy"}};
  Instrument gm(InstrumentKind::GreenMachine1, fast_config(), rec.transport());
  try {
    gm(0, 0.5);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.status(), 503);
  }
  EXPECT_EQ(rec.paths.size(), 3u);

  Recorder down;
  down.script = {{0, ""}, {0, ""}, {0, ""}};
  EXPECT_THROW(Instrument(InstrumentKind::GreenMachine1, fast_config(), down.transport())(0, 1), TransportError);
  EXPECT_EQ(down.paths.size(), 3u);
}

TEST(Instrument, ClientErrorsAreNotRetried) {
  Recorder rec;
  rec.script = {{400, R"({"error":"bad"})"}};
  EXPECT_THROW(Instrument(InstrumentKind::CLRGB, fast_config(), rec.transport())(0, 0, 0), ProtocolError);
  EXPECT_EQ(rec.paths.size(), 1u);
}

TEST(Instrument, MalformedRepliesAreProtocolErrors) {
  for (std::string bad : {std::string("not json"), std::string("{}"), std::string(R"({"out": {"515nm": 1.5}})"),
                          std::string(R"({"out": {"515nm": 70000}})"), std::string(R"({"out": {"480nm": 1}})")}) {
    Recorder rec;
    rec.script = {{200, bad}};
    EXPECT_THROW(Instrument(InstrumentKind::GreenMachine1, fast_config(), rec.transport())(0, 1), ProtocolError) << bad;
  }
}

TEST(ClientConfigTest, EnvAndValidation) {
  const auto c = ClientConfig::from_env([](const char* k) -> std::optional<std::string> {
    return std::string(k) == "HELIOS_BASE_URL" ? std::optional<std::string>("http://lab:9") : std::nullopt;
  });
  EXPECT_EQ(c.base_url, "http://lab:9");
  ClientConfig bad;
  bad.retries = -1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0), "1");
}

TEST(Instrument, TalksToARealServer) {
  helios::testing::TempDir dir;
  service::ServiceConfig sc;
  sc.log_path = dir.file("log.jsonl");
  const ResponseModel m = noiseless(default_model());
  service::InstrumentService svc(m, sc);
  service::HttpServer server(svc);
  const int port = server.start("127.0.0.1", 0);
  ClientConfig cc;
  cc.base_url = "http://127.0.0.1:" + std::to_string(port) + "/";
  const auto counts = Instrument(InstrumentKind::CLLight, cc)(0.25, 0.5, 0.75);
  const Eigen::VectorXd want = helios::testing::oracle_counts(m, 0.25, 0.5, 0.75);
  ASSERT_EQ(counts.size(), 10u);
  for (int c = 0; c < 10; ++c) EXPECT_NEAR(counts[static_cast<std::size_t>(c)], std::min(want(c), 65535.0), 0.5 + 1e-9);
  EXPECT_EQ(measure(InstrumentKind::GreenMachine1, RgbSetting(0, 0.5, 0), cc).size(), 1u);
  server.stop();

  cc.retries = 0;
  EXPECT_THROW(Instrument(InstrumentKind::CLLight, cc)(0.1, 0.1, 0.1), TransportError);
}
