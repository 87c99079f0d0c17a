// Starts a simulated lab on a free local port, sweeps the green LED with the
// GreenMachine1 client and fits a line through the unsaturated readings.

#include <cstdio>
#include <filesystem>
#include <vector>

#include "helios/client/client.hpp"
#include "helios/doe/sweep.hpp"
#include "helios/service/http_server.hpp"
#include "helios/sim/calibration.hpp"

using namespace helios;

int main() {
  service::ServiceConfig sc;
  sc.log_path = (std::filesystem::temp_directory_path() / "helios-sweep-demo.jsonl").string();
  sc.latency_s = 0.0;
  service::InstrumentService svc(default_model(), sc);
  service::HttpServer server(svc);
  const int port = server.start("127.0.0.1", 0);

  client::ClientConfig cc;
  cc.base_url = "http://127.0.0.1:" + std::to_string(port) + "/";
  const client::Instrument gm(client::InstrumentKind::GreenMachine1, cc);

  std::vector<double> xs, ys;
  for (double g : doe::linspace(0.0, 1.0, 11)) {
    const int y = gm(0.0, g)[0];
    std::printf("G=%.1f  515nm=%d%s\n", g, y, y >= kMaxCount ? "  (saturated)" : "");
    if (y < kMaxCount) {
      xs.push_back(g);
      ys.push_back(y);
    }
  }
  server.stop();
  const auto fit = doe::fit_line(xs, ys);
  std::printf("slope %.2f, intercept %.2f over %zu points\n", fit.slope, fit.intercept, xs.size());
  std::printf("experiment log: %s\n", sc.log_path.c_str());
}
