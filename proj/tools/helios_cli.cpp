#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "helios/cli/commands.hpp"

using namespace helios;

int main(int argc, char** argv) {
  CLI::App app{"helios: simulated RGB LED + 10-channel photometer, with DoE, GP inverse design and an LLM bridge"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  cli::CliFlags flags;
  app.add_option("--config", flags.config_path, "JSON config file (also HELIOS_CONFIG)");
  app.add_option("--base-url", flags.base_url, "instrument server URL (also HELIOS_BASE_URL)");
  app.add_option("--seed", flags.seed, "seed for noise and sampling; always printed by randomized commands");
  app.add_option("--latency", flags.latency, "artificial measurement latency in seconds (serve)");
  app.add_option("--calibration", flags.calibration, "helios-cal/1 calibration file (serve)");
  app.add_option("--provider-script", flags.provider_script, "helios-llm-script/1 file for a scripted LLM provider");
  app.add_flag("--json", flags.json, "machine-readable output");
  app.add_flag("--live", flags.provider_live, "allow a real network LLM provider");
  app.add_option("--audit-log", flags.audit_log, "append LLM transcripts here");

  auto* serve = app.add_subcommand("serve", "run the instrument HTTP service");
  serve->add_option("--host", flags.host, "listen address");
  serve->add_option("--port", flags.port, "listen port (0 picks a free port)");
  serve->add_option("--log", flags.log_path, "experiment log (JSONL)");
  serve->add_option("--static-dir", flags.static_dir, "directory served at /");

  cli::SweepArgs sweep_args;
  std::string sweep_input = "G";
  auto* sweep = app.add_subcommand("sweep", "evenly spaced sweep of one input with a line fit");
  sweep->add_option("-n,--points", sweep_args.n, "number of points")->capture_default_str();
  sweep->add_option("--input", sweep_input, "input to sweep: R, G or B")->capture_default_str();
  sweep->add_option("--instrument", sweep_args.instrument, "GreenMachine1, GreenMachine3, CLRGB or CLLight")->capture_default_str();
  sweep->add_option("--channel", sweep_args.channel, "output channel to fit")->capture_default_str();
  sweep->add_option("--plot", sweep_args.plot_path, "write x, y, fitted y to this file");

  cli::DoeArgs doe_args;
  auto* doe = app.add_subcommand("doe", "3x3 Latin square on CLRGB with ANOVA");
  doe->add_option("--response", doe_args.response, "response channel: 630nm, 515nm or 445nm")->capture_default_str();
  doe->add_option("--fc", doe_args.f_critical, "critical F value")->capture_default_str();
  doe->add_option("--design-seed", doe_args.design_seed, "randomize level order with this seed");

  cli::InverseArgs inv_args;
  auto* inverse = app.add_subcommand("inverse", "fit a GP to random samples and solve for a target output");
  inverse->add_option("--target", inv_args.target, "target counts for 630nm 515nm 445nm")->expected(3);
  inverse->add_option("--samples", inv_args.samples, "training samples")->capture_default_str();
  inverse->add_option("--repeats", inv_args.repeats, "verification measurements")->capture_default_str();

  std::string text;
  auto* ask = app.add_subcommand("ask", "ask the LLM which instrument fits a need");
  ask->add_option("question", text, "what you want to measure")->required();
  auto* extract = app.add_subcommand("extract", "extract R, G, B settings from text via the LLM");
  extract->add_option("text", text, "request text")->required();
  auto* code = app.add_subcommand("code", "ask the LLM for code; the result is printed, never run");
  code->add_option("prompt", text, "what the code should do")->required();
  auto* toolchat = app.add_subcommand("toolchat", "answer a question with LLM tool calls to the instruments");
  toolchat->add_option("question", text, "question")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  cli::CliConfig config;
  try {
    config = cli::resolve_config(flags, process_env());
  } catch (const std::exception& e) {
    std::cerr << "helios: " << e.what() << "\n";
    return cli::kExitUsage;
  }

  try {
    if (*serve) {
      cli::block_shutdown_signals();
      return cli::cmd_serve(config, std::cout, std::cerr);
    }
    if (*sweep) {
      if (sweep_input.size() != 1) {
        std::cerr << "helios sweep: input must be R, G or B\n";
        return cli::kExitUsage;
      }
      sweep_args.input = sweep_input[0];
      return cli::cmd_sweep(config, sweep_args, std::cout, std::cerr);
    }
    if (*doe) return cli::cmd_doe(config, doe_args, std::cout, std::cerr);
    if (*inverse) return cli::cmd_inverse(config, inv_args, std::cout, std::cerr);
    if (*ask) return cli::cmd_ask(config, text, std::cout, std::cerr);
    if (*extract) return cli::cmd_extract(config, text, std::cout, std::cerr);
    if (*code) return cli::cmd_code(config, text, std::cout, std::cerr);
    if (*toolchat) return cli::cmd_toolchat(config, text, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "helios: " << e.what() << "\n";
    return cli::kExitRuntime;
  }
  return cli::kExitUsage;
}
