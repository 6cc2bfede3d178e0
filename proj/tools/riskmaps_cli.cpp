// Command-line front end: batch runs, the live stream server, bundled
// scenario generation and risk-field export.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "riskmaps/riskmaps.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct SourceOptions {
  std::string scenario;
  std::string builtin;
  std::optional<std::uint64_t> seed;
  bool noise = false;
  std::vector<std::string> overrides;

  void add_to(CLI::App* app) {
    auto* file = app->add_option("--scenario", scenario, "scenario JSON file");
    auto* bi = app->add_option("--builtin", builtin, "bundled scenario: gap or no_gap");
    file->excludes(bi);
    app->add_option("--seed", seed, "noise seed");
    app->add_flag("--noise", noise, "perturb observed states with the scenario noise model");
    app->add_option("--set", overrides, "parameter override group.key=value (repeatable)");
  }

  [[nodiscard]] riskmaps::RunConfig config() const {
    riskmaps::RunConfig cfg;
    if (!scenario.empty()) cfg.scenario_path = scenario;
    if (!builtin.empty()) cfg.builtin = builtin;
    cfg.seed = seed;
    if (noise) cfg.noise = true;
    cfg.overrides = overrides;
    return cfg;
  }
};

int cmd_serve(const riskmaps::RunConfig& cfg, double speed, bool human) {
  riskmaps::ServeOptions opt;
  opt.speed = speed;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  return riskmaps::run_serve(cfg, opt, g_stop, human);
}

int cmd_gen(const std::string& out_dir) {
  using namespace riskmaps;
  try {
    std::filesystem::create_directories(out_dir);
    for (const auto& sc : {make_gap_scenario(), make_no_gap_scenario()}) {
      const auto path = std::filesystem::path(out_dir) / (sc.name + ".json");
      write_text_file(path, [&](std::ostream& os) { os << to_json(sc).dump(2) << '\n'; });
      std::cerr << "wrote " << path.string() << '\n';
    }
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_plot(const riskmaps::RunConfig& cfg, std::size_t cycle, const std::string& out, const std::string& ppm) {
  using namespace riskmaps;
  try {
    const auto trace = run_scenario(resolve_scenario(cfg));
    if (out.empty() || out == "-") {
      export_risk_field(std::cout, trace, cycle);
    } else {
      write_text_file(out, [&](std::ostream& os) { export_risk_field(os, trace, cycle); });
    }
    if (!ppm.empty()) {
      write_text_file(ppm, [&](std::ostream& os) { write_risk_field_ppm(os, record_at(trace, cycle).field); });
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"riskmaps: risk-based driving advice engine"};
  app.require_subcommand(1);

  SourceOptions run_src;
  std::string run_out = "out";
  auto* run = app.add_subcommand("run", "run a scenario to completion and write trace, risk field and summary");
  run_src.add_to(run);
  run->add_option("--out", run_out, "output directory");

  SourceOptions serve_src;
  std::string listen = "127.0.0.1:8080";
  double speed = 1.0;
  bool human = false;
  auto* serve = app.add_subcommand("serve", "stream live sessions over HTTP");
  serve_src.add_to(serve);
  serve->add_option("--listen", listen, "host:port to bind");
  serve->add_option("--speed", speed, "simulation speed factor")->check(CLI::PositiveNumber);
  serve->add_flag("--human", human, "the client drives the ego");

  std::string gen_out = "scenarios";
  auto* gen = app.add_subcommand("gen", "write the bundled scenarios as JSON files");
  gen->add_option("--out", gen_out, "output directory");

  SourceOptions plot_src;
  std::size_t cycle = 0;
  std::string plot_out;
  std::string ppm;
  auto* plot = app.add_subcommand("plot", "export the risk-field grid of one cycle");
  plot_src.add_to(plot);
  plot->add_option("--cycle", cycle, "planning cycle index")->required();
  plot->add_option("--out", plot_out, "grid file (default stdout)");
  plot->add_option("--ppm", ppm, "also write a PPM heatmap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : riskmaps::kExitConfigError;
  }

  if (run->parsed()) {
    auto cfg = run_src.config();
    cfg.out_dir = run_out;
    return riskmaps::run_batch(cfg);
  }
  if (serve->parsed()) {
    auto cfg = serve_src.config();
    cfg.mode = riskmaps::RunMode::Serve;
    cfg.listen = listen;
    return cmd_serve(cfg, speed, human);
  }
  if (gen->parsed()) return cmd_gen(gen_out);
  return cmd_plot(plot_src.config(), cycle, plot_out, ppm);
}
