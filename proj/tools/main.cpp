// shiftplan: choose sites for shiftable load from the command line.
#include "shiftplan/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Common {
  std::string config;
  shiftplan::Overrides ov;
};

void add_common(CLI::App* cmd, Common& c, bool search_flags) {
  cmd->add_option("--config", c.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option_function<std::string>(
      "--out", [&c](const std::string& v) { c.ov.out = v; }, "Output directory");
  if (!search_flags) return;
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&c](const std::uint64_t& v) { c.ov.seed = v; }, "Search seed");
  cmd->add_option_function<double>(
         "--time-budget", [&c](const double& v) { c.ov.time_budget = v; },
         "Wall-clock budget in seconds")
      ->check(CLI::PositiveNumber);
  cmd->add_option_function<std::size_t>(
         "--rounds", [&c](const std::size_t& v) { c.ov.rounds = v; }, "Maximum search rounds")
      ->check(CLI::PositiveNumber);
}

shiftplan::RunConfig load(const Common& c) {
  auto cfg = shiftplan::load_run_config(c.config);
  shiftplan::apply_overrides(cfg, c.ov);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Carbon-aware siting of shiftable electric load"};
  app.require_subcommand(1);

  Common baseline, plan, enumerate, synth, report;
  add_common(app.add_subcommand("baseline", "Cost-optimal dispatch and cost caps"), baseline, false);
  add_common(app.add_subcommand("plan", "Search for the emission-minimal location plan"), plan, true);
  add_common(app.add_subcommand("enumerate", "Evaluate every candidate plan"), enumerate, false);
  add_common(app.add_subcommand("synth", "Write the configured synthetic scenario"), synth, true);

  auto* rep = app.add_subcommand("report", "Summarize the artifacts of a plan run");
  std::string report_dir;
  rep->add_option("--out", report_dir, "Directory holding plan artifacts");
  rep->add_option("--config", report.config, "Config whose output_dir holds the artifacts")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (app.got_subcommand("baseline")) {
      shiftplan::run_baseline(load(baseline), std::cerr);
    } else if (app.got_subcommand("plan")) {
      shiftplan::run_plan(load(plan), std::cerr);
    } else if (app.got_subcommand("enumerate")) {
      shiftplan::run_enumerate(load(enumerate), std::cerr);
    } else if (app.got_subcommand("synth")) {
      std::cout << shiftplan::run_synth(load(synth), std::cerr).string() << "\n";
    } else if (app.got_subcommand("report")) {
      std::filesystem::path dir = report_dir;
      if (dir.empty()) {
        if (report.config.empty()) {
          std::cerr << "report: give --out or --config\n";
          return 3;
        }
        dir = shiftplan::load_run_config(report.config).output_dir;
      }
      std::cout << shiftplan::run_report(dir, std::cerr);
    }
  } catch (const shiftplan::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return shiftplan::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
