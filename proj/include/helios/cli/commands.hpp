#pragma once

#include <csignal>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "helios/cli/config.hpp"
#include "helios/client/client.hpp"
#include "helios/doe/anova.hpp"
#include "helios/doe/latin_square.hpp"
#include "helios/doe/sweep.hpp"
#include "helios/learn/inverse_design.hpp"
#include "helios/learn/metrics.hpp"
#include "helios/llm/operations.hpp"
#include "helios/llm/scripted_provider.hpp"
#include "helios/service/http_server.hpp"

namespace helios::cli {

using Json = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline client::ClientConfig client_config(const CliConfig& c) {
  client::ClientConfig cc;
  cc.base_url = c.base_url;
  cc.retries = c.client_retries;
  cc.backoff_base = std::chrono::duration<double>(c.client_backoff_s);
  cc.timeout = std::chrono::duration<double>(c.client_timeout_s);
  return cc;
}

inline std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline void emit(std::ostream& out, const CliConfig& c, const Json& doc, const std::string& text) {
  if (c.json) {
    out << doc.dump(2) << "\n";
  } else {
    out << text;
  }
}

inline std::size_t output_index(const client::InstrumentInfo& info, Channel ch) {
  for (std::size_t i = 0; i < info.outputs.size(); ++i) {
    if (info.outputs[i] == ch) return i;
  }
  throw UsageError(std::string(info.name) + " has no " + std::string(wire_name(ch)) + " output");
}

inline Channel parse_channel(const std::string& name) {
  const auto ch = channel_from_wire(name);
  if (!ch) throw UsageError("unknown channel '" + name + "'");
  return *ch;
}

}  // namespace detail

// ---- serve ----

inline void wait_for_shutdown_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
}

// Blocks SIGINT/SIGTERM in this thread (and threads it starts) so that
// wait_for_shutdown_signal can collect them.
inline void block_shutdown_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

inline int cmd_serve(const CliConfig& c, std::ostream& out, std::ostream& err,
                     const std::function<void(const std::string& base_url)>& wait = {}) {
  ResponseModel model;
  try {
    model = service::model_for(c.service);
  } catch (const std::exception& e) {
    err << "helios serve: cannot load calibration: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    service::InstrumentService svc(model, c.service);
    service::HttpServer server(svc, c.service.static_dir);
    server.start(c.service.host, c.service.port);
    Json info{{"listening", server.base_url()},
              {"calibration", c.service.calibration_path.empty() ? std::string(kCalibrationVersion) : c.service.calibration_path},
              {"seed", model.seed},
              {"latency_s", c.service.latency_s},
              {"log", c.service.log_path}};
    detail::emit(out, c, info,
                 "helios serving on " + server.base_url() + " (calibration " + info["calibration"].get<std::string>() +
                     ", seed " + std::to_string(model.seed) + ", latency " + detail::fixed(c.service.latency_s, 3) +
                     " s, log " + c.service.log_path + ")\n");
    out.flush();
    if (wait) {
      wait(server.base_url());
    } else {
      wait_for_shutdown_signal();
    }
    server.stop();
  } catch (const service::BindError& e) {
    err << "helios serve: " << e.what() << "\n";
    return kExitUsage;
  } catch (const service::LogError& e) {
    err << "helios serve: " << e.what() << "\n";
    return kExitUsage;
  } catch (const service::ConfigError& e) {
    err << "helios serve: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "helios serve: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

// ---- sweep ----

struct SweepArgs {
  std::size_t n = 5;
  char input = 'G';
  std::string instrument = "GreenMachine1";
  std::string channel = "515nm";
  std::string plot_path;  // x, y, fitted y as TSV
};

inline int cmd_sweep(const CliConfig& c, const SweepArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<double> xs;
  const client::InstrumentInfo* info = nullptr;
  std::size_t idx = 0;
  try {
    if (a.n < 2) throw UsageError("sweep needs n >= 2");
    if (a.input != 'R' && a.input != 'G' && a.input != 'B') throw UsageError("input must be R, G or B");
    info = &client::info(a.instrument);
    if (std::find(info->inputs.begin(), info->inputs.end(), a.input) == info->inputs.end()) {
      throw UsageError(std::string(info->name) + " does not take input " + a.input);
    }
    idx = detail::output_index(*info, detail::parse_channel(a.channel));
    xs = doe::linspace(0.0, 1.0, a.n);
  } catch (const std::invalid_argument& e) {
    err << "helios sweep: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "helios sweep: " << e.what() << "\n";
    return kExitUsage;
  }

  const client::Instrument inst(info->kind, detail::client_config(c));
  Json points = Json::array();
  std::vector<double> fx, fy;
  std::size_t failed = 0, saturated = 0;
  for (double x : xs) {
    Json p{{"x", x}};
    try {
      const RgbSetting s(a.input == 'R' ? x : 0.0, a.input == 'G' ? x : 0.0, a.input == 'B' ? x : 0.0);
      const int y = inst.measure(s)[idx];
      p["y"] = y;
      if (y >= kMaxCount) {
        p["saturated"] = true;
        ++saturated;
      } else {
        fx.push_back(x);
        fy.push_back(y);
      }
    } catch (const std::exception& e) {
      p["error"] = e.what();
      ++failed;
      err << "helios sweep: point x=" << x << " failed: " << e.what() << "\n";
    }
    points.push_back(p);
  }

  Json doc{{"schema", "helios-sweep/1"},
           {"instrument", info->name},
           {"input", std::string(1, a.input)},
           {"channel", a.channel},
           {"points", points}};
  std::optional<doe::LineFit> fit;
  std::string note;
  if (static_cast<double>(failed) > 0.2 * static_cast<double>(xs.size())) {
    note = "fit skipped: " + std::to_string(failed) + " of " + std::to_string(xs.size()) + " points failed";
  } else if (fx.size() < 2) {
    note = "fit skipped: fewer than 2 unsaturated points";
  } else {
    try {
      fit = doe::fit_line(fx, fy);
    } catch (const doe::SingularFitError& e) {
      note = std::string("fit skipped: ") + e.what();
    }
  }
  doc["fit"] = fit ? Json{{"slope", fit->slope}, {"intercept", fit->intercept}, {"points_used", fx.size()}} : Json(nullptr);
  if (!note.empty()) doc["note"] = note;

  std::ostringstream text;
  text << "x\t" << a.channel << "\n";
  for (const auto& p : points) {
    text << detail::fixed(p["x"].get<double>(), 4) << "\t";
    if (p.contains("y")) {
      text << p["y"].get<int>() << (p.contains("saturated") ? "\t(saturated, excluded from fit)" : "");
    } else {
      text << "error";
    }
    text << "\n";
  }
  if (fit) {
    text << "The slope is " << detail::fixed(fit->slope, 2) << ", intercept is " << detail::fixed(fit->intercept, 2) << "\n";
  }
  if (!note.empty()) text << note << "\n";
  detail::emit(out, c, doc, text.str());

  if (!a.plot_path.empty() && fit) {
    std::ofstream plot(a.plot_path);
    if (!plot) {
      err << "helios sweep: cannot write " << a.plot_path << "\n";
      return kExitRuntime;
    }
    plot << "# x\ty\tfit\n";
    for (const auto& p : points) {
      if (!p.contains("y")) continue;
      const double x = p["x"].get<double>();
      plot << x << "\t" << p["y"].get<int>() << "\t" << fit->slope * x + fit->intercept << "\n";
    }
  }
  (void)saturated;
  return failed > 0 ? kExitRuntime : kExitOk;
}

// ---- doe ----

struct DoeArgs {
  std::string response = "630nm";  // one of CLRGB's outputs
  double f_critical = doe::kDefaultFCritical;
  std::optional<std::uint64_t> design_seed;  // randomize level order
};

inline int cmd_doe(const CliConfig& c, const DoeArgs& a, std::ostream& out, std::ostream& err) {
  const auto& info = client::info(client::InstrumentKind::CLRGB);
  std::size_t idx = 0;
  doe::LatinSquareDesign design;
  try {
    idx = detail::output_index(info, detail::parse_channel(a.response));
    design = doe::latin_square({{"R", {0.0, 0.5, 1.0}}, {"G", {0.0, 0.5, 1.0}}, {"B", {0.0, 0.5, 1.0}}}, a.design_seed);
  } catch (const std::exception& e) {
    err << "helios doe: " << e.what() << "\n";
    return kExitUsage;
  }
  const client::Instrument inst(info.kind, detail::client_config(c));
  std::vector<double> y;
  Json outputs = Json::array();
  for (std::size_t r = 0; r < design.runs.size(); ++r) {
    const auto v = design.values(r);
    try {
      const auto counts = inst(v[0], v[1], v[2]);
      outputs.push_back(counts);
      y.push_back(counts[idx]);
    } catch (const std::exception& e) {
      err << "helios doe: run " << r << " failed: " << e.what() << "\n";
      return kExitRuntime;
    }
  }
  const doe::AnovaTable table = doe::anova_effects(design, y, a.f_critical, a.response);
  Json doc{{"schema", "helios-doe-run/1"},
           {"instrument", info.name},
           {"response", a.response},
           {"design", doe::to_json(design)},
           {"outputs", outputs},
           {"anova", doe::to_json(table)}};
  std::ostringstream text;
  text << doe::to_text(design);
  text << "\nresponse: " << a.response << " = [";
  for (std::size_t i = 0; i < y.size(); ++i) text << (i ? ", " : "") << static_cast<long long>(y[i]);
  text << "]\n\n" << doe::to_text(table);
  detail::emit(out, c, doc, text.str());
  return kExitOk;
}

// ---- inverse ----

struct InverseArgs {
  std::vector<double> target{10000.0, 10000.0, 10000.0};  // CLRGB outputs 630/515/445
  std::size_t samples = 20;
  std::size_t repeats = 10;
  double test_fraction = 0.2;
  double sample_max = 0.8;
};

inline int cmd_inverse(const CliConfig& c, const InverseArgs& a, std::ostream& out, std::ostream& err) {
  if (a.target.size() != 3) {
    err << "helios inverse: target needs 3 values (630nm, 515nm, 445nm)\n";
    return kExitUsage;
  }
  if (a.samples < 10 || a.repeats < 2 || !(a.test_fraction > 0 && a.test_fraction < 1) || !(a.sample_max > 0 && a.sample_max <= 1)) {
    err << "helios inverse: need samples >= 10, repeats >= 2, 0 < test_fraction < 1, 0 < sample_max <= 1\n";
    return kExitUsage;
  }
  const client::Instrument inst(client::InstrumentKind::CLRGB, detail::client_config(c));
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> u(0.0, a.sample_max);
  const auto n = static_cast<Eigen::Index>(a.samples);
  Eigen::MatrixXd X(n, 3), Y(n, 3);
  try {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) X(i, k) = u(rng);
      const auto counts = inst(X(i, 0), X(i, 1), X(i, 2));
      for (int k = 0; k < 3; ++k) Y(i, k) = counts[static_cast<std::size_t>(k)];
    }
  } catch (const std::exception& e) {
    err << "helios inverse: sampling failed: " << e.what() << "\n";
    return kExitRuntime;
  }

  Json doc{{"schema", "helios-inverse/1"}, {"seed", c.seed}, {"target", a.target}, {"samples", a.samples}};
  std::ostringstream text;
  text << "seed " << c.seed << ", " << a.samples << " samples in [0, " << a.sample_max << "]^3\n";
  learn::GpModel model;
  try {
    const auto split = learn::train_test_split(X, Y, a.test_fraction, c.seed);
    const auto scored = learn::GpModel::fit(split.X_train, split.Y_train);
    const double r2 = learn::r2_score(split.Y_test, scored.predict_mean(split.X_test));
    doc["r2_test"] = r2;
    text << "held-out R^2 (" << split.test_rows.size() << " points): " << detail::fixed(r2, 6) << "\n";
    model = learn::GpModel::fit(X, Y);
  } catch (const std::exception& e) {
    err << "helios inverse: model fit failed: " << e.what() << "\n";
    return kExitRuntime;
  }
  doc["hyperparams"] = {{"sigma0_sq", model.hyperparams().sigma0_sq}, {"noise", model.hyperparams().noise}};

  const Eigen::Vector3d target(a.target[0], a.target[1], a.target[2]);
  const auto sol = learn::inverse_design(model, target);
  const auto v = sol.setting.values();
  doc["solution"] = {{"R", v[0]}, {"G", v[1]}, {"B", v[2]}};
  doc["unclamped"] = sol.unclamped;
  doc["converged"] = sol.converged;
  doc["clamped"] = sol.clamped;
  doc["predicted"] = {{"mean", std::vector<double>(sol.predicted.data(), sol.predicted.data() + 3)},
                      {"std", std::vector<double>(sol.predicted_std.data(), sol.predicted_std.data() + 3)}};
  if (!sol.converged) err << "helios inverse: warning: optimizer did not converge; reporting best point\n";
  if (sol.clamped) err << "helios inverse: warning: optimum lies outside [0,1]^3 and was clamped to the boundary; target may be unreachable\n";

  std::vector<std::vector<int>> repeats;
  try {
    for (std::size_t r = 0; r < a.repeats; ++r) repeats.push_back(inst(v[0], v[1], v[2]));
  } catch (const std::exception& e) {
    err << "helios inverse: verification failed: " << e.what() << "\n";
    return kExitRuntime;
  }
  std::vector<double> mean(3, 0.0), sd(3, 0.0);
  for (int k = 0; k < 3; ++k) {
    for (const auto& r : repeats) mean[k] += r[k];
    mean[k] /= static_cast<double>(repeats.size());
    for (const auto& r : repeats) sd[k] += (r[k] - mean[k]) * (r[k] - mean[k]);
    sd[k] = std::sqrt(sd[k] / static_cast<double>(repeats.size() - 1));
  }
  doc["verification"] = {{"mean", mean}, {"std", sd}, {"counts", repeats}};

  text << "solution: R=" << detail::fixed(v[0], 6) << " G=" << detail::fixed(v[1], 6) << " B=" << detail::fixed(v[2], 6)
       << (sol.converged ? "" : " (not converged)") << (sol.clamped ? " (clamped)" : "") << "\n";
  text << "           630nm      515nm      445nm\n";
  auto row = [&](const char* label, const std::vector<double>& vals) {
    text << std::left << std::setw(10) << label << std::right;
    for (double x : vals) text << std::setw(11) << detail::fixed(x, 1);
    text << "\n";
  };
  row("target", a.target);
  row("predicted", doc["predicted"]["mean"].get<std::vector<double>>());
  row("pred std", doc["predicted"]["std"].get<std::vector<double>>());
  row("measured", mean);
  row("meas std", sd);
  detail::emit(out, c, doc, text.str());
  return kExitOk;
}

// ---- LLM commands ----

namespace detail {

// Remembers the last request and successful reply so a command can write the
// conversation to the audit log.
class RecordingTransport : public llm::ChatTransport {
 public:
  explicit RecordingTransport(std::shared_ptr<llm::ChatTransport> inner) : inner_(std::move(inner)) {}
  llm::ProviderReply post(const nlohmann::ordered_json& request) override {
    last_request_ = request;
    auto r = inner_->post(request);
    if (r.status == 200) last_reply_ = r.body;
    return r;
  }
  std::vector<std::string> conversation_lines() const {
    std::vector<std::string> lines;
    if (!last_request_.is_object()) return lines;
    for (const auto& m : last_request_["messages"]) lines.push_back(m.dump());
    try {
      lines.push_back(llm::to_wire(llm::parse_completion(last_reply_).message).dump());
    } catch (const std::exception&) {
    }
    return lines;
  }

 private:
  std::shared_ptr<llm::ChatTransport> inner_;
  nlohmann::ordered_json last_request_;
  std::string last_reply_;
};

struct LlmContext {
  std::shared_ptr<RecordingTransport> recorder;
  std::unique_ptr<llm::Session> session;
};

inline LlmContext make_llm(const CliConfig& c, const EnvLookup& env) {
  std::shared_ptr<llm::ChatTransport> base;
  if (!c.provider_script.empty()) {
    try {
      base = std::make_shared<llm::ScriptedProvider>(llm::ScriptedProvider::load_script(c.provider_script));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else if (c.provider_live) {
    base = std::make_shared<llm::HttpChatTransport>(c.provider, env);
  } else {
    throw UsageError("no LLM provider configured: pass --provider-script FILE, or opt in to a live provider with --live");
  }
  LlmContext ctx;
  ctx.recorder = std::make_shared<RecordingTransport>(base);
  ctx.session = std::make_unique<llm::Session>(c.provider, ctx.recorder);
  return ctx;
}

inline void append_audit(const CliConfig& c, const std::vector<std::string>& lines, std::ostream& err) {
  if (c.audit_log.empty() || lines.empty()) return;
  std::ofstream a(c.audit_log, std::ios::app);
  if (!a) {
    err << "warning: cannot append to audit log " << c.audit_log << "\n";
    return;
  }
  for (const auto& l : lines) a << l << "\n";
}

template <class Body>
int run_llm(const char* name, const CliConfig& c, const EnvLookup& env, std::ostream& err, Body&& body) {
  LlmContext ctx;
  try {
    ctx = make_llm(c, env);
  } catch (const UsageError& e) {
    err << "helios " << name << ": " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    return body(ctx);
  } catch (const llm::LoopError& e) {
    append_audit(c, [&] {
      std::vector<std::string> l;
      for (const auto& m : e.transcript()) l.push_back(llm::to_wire(m).dump());
      return l;
    }(), err);
    err << "helios " << name << ": " << e.what() << "\n";
  } catch (const llm::ExtractionError& e) {
    append_audit(c, ctx.recorder->conversation_lines(), err);
    err << "helios " << name << ": " << e.what() << "\nraw reply: " << e.raw() << "\n";
  } catch (const llm::ProviderError& e) {
    err << "helios " << name << ": " << e.what() << (e.body().empty() ? "" : "\n" + e.body()) << "\n";
  } catch (const std::exception& e) {
    err << "helios " << name << ": " << e.what() << "\n";
  }
  return kExitRuntime;
}

}  // namespace detail

inline int cmd_ask(const CliConfig& c, const std::string& question, std::ostream& out, std::ostream& err,
                   const EnvLookup& env = process_env()) {
  if (question.find_first_not_of(" \t\r\n") == std::string::npos) {
    err << "helios ask: question is empty\n";
    return kExitUsage;
  }
  return detail::run_llm("ask", c, env, err, [&](detail::LlmContext& ctx) {
    const std::string answer = llm::select_instrument(*ctx.session, client::instrument_catalog(), question);
    detail::append_audit(c, ctx.recorder->conversation_lines(), err);
    detail::emit(out, c, Json{{"question", question}, {"answer", answer}}, answer + "\n");
    return kExitOk;
  });
}

inline int cmd_extract(const CliConfig& c, const std::string& text, std::ostream& out, std::ostream& err,
                       const EnvLookup& env = process_env()) {
  return detail::run_llm("extract", c, env, err, [&](detail::LlmContext& ctx) {
    const llm::RgbExtraction x = llm::extract_rgb(*ctx.session, text);
    detail::append_audit(c, ctx.recorder->conversation_lines(), err);
    auto num = [](double v) { return Json(v).dump(); };
    detail::emit(out, c, Json{{"R", x.R}, {"G", x.G}, {"B", x.B}, {"attempts", x.attempts}},
                 "{\"R\": " + num(x.R) + ", \"G\": " + num(x.G) + ", \"B\": " + num(x.B) + "}\n");
    return kExitOk;
  });
}

inline int cmd_code(const CliConfig& c, const std::string& prompt, std::ostream& out, std::ostream& err,
                    const EnvLookup& env = process_env()) {
  return detail::run_llm("code", c, env, err, [&](detail::LlmContext& ctx) {
    llm::AuditLog audit;
    const auto code = llm::extract_code(*ctx.session, prompt, &audit);
    std::vector<std::string> lines = ctx.recorder->conversation_lines();
    for (const auto& e : audit.entries()) lines.push_back(Json{{"audit", e.kind}, {"detail", e.detail}}.dump());
    detail::append_audit(c, lines, err);
    detail::emit(out, c,
                 Json{{"code", code.code},
                      {"provenance", {{"prompt", code.provenance.prompt}, {"model", code.provenance.model}, {"timestamp", code.provenance.timestamp}}},
                      {"executed", false}},
                 code.code + (code.code.empty() || code.code.back() == '\n' ? "" : "\n"));
    return kExitOk;
  });
}

inline int cmd_toolchat(const CliConfig& c, const std::string& question, std::ostream& out, std::ostream& err,
                        const EnvLookup& env = process_env()) {
  if (question.find_first_not_of(" \t\r\n") == std::string::npos) {
    err << "helios toolchat: question is empty\n";
    return kExitUsage;
  }
  return detail::run_llm("toolchat", c, env, err, [&](detail::LlmContext& ctx) {
    llm::ToolRegistry registry;
    std::vector<llm::ToolSpec> specs;
    for (const auto& i : client::instrument_table()) {
      registry[std::string(i.name)] = llm::instrument_tool(client::Instrument(i.kind, detail::client_config(c)));
      specs.push_back(llm::build_tool_spec(i.kind));
    }
    const auto result = llm::tool_call_loop(*ctx.session, {llm::ChatMessage::user(question)}, registry, specs);
    std::vector<std::string> lines;
    Json transcript = Json::array();
    for (const auto& m : result.transcript) {
      transcript.push_back(llm::to_wire(m));
      lines.push_back(transcript.back().dump());
    }
    detail::append_audit(c, lines, err);
    const std::string answer = result.final.content.value_or("");
    detail::emit(out, c, Json{{"answer", answer}, {"rounds", result.rounds}, {"transcript", transcript}}, answer + "\n");
    return kExitOk;
  });
}

}  // namespace helios::cli
