#include "shiftplan/error.hpp"
#include "shiftplan/pipeline.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <cstdlib>
#include <filesystem>
#include <sstream>

using namespace shiftplan;
namespace fs = std::filesystem;
using fixtures::read_file;

namespace {

RunConfig toy_config(const std::string& out_name) {
  RunConfig cfg = load_run_config(fixtures::config_path("toy3.json"));
  cfg.output_dir = fixtures::scratch_dir(out_name);
  return cfg;
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST(Metrics, Arithmetic) {
  const PlanMetrics m = compute_metrics(1000.0, 900.0, 25.0, 50.0);
  EXPECT_DOUBLE_EQ(m.delta, 100.0);
  EXPECT_DOUBLE_EQ(*m.mu_redu, 0.1);
  EXPECT_DOUBLE_EQ(*m.mu_allow, 2.0);
  EXPECT_DOUBLE_EQ(*m.mu_shift, 4.0);
}

TEST(Metrics, UndefinedRatios) {
  const PlanMetrics m = compute_metrics(500.0, 500.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(*m.mu_redu, 0.0);
  EXPECT_FALSE(m.mu_shift.has_value());
  EXPECT_FALSE(m.mu_allow.has_value());
  EXPECT_FALSE(compute_metrics(0.0, 0.0, 1.0, 1.0).mu_redu.has_value());
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code(ErrorKind::BaselineInfeasible), 2);
  EXPECT_EQ(exit_code(ErrorKind::NoFeasiblePlan), 2);
  EXPECT_EQ(exit_code(ErrorKind::Config), 3);
  EXPECT_EQ(exit_code(ErrorKind::InvalidIndex), 3);
  EXPECT_EQ(exit_code(ErrorKind::EnumerationTooLarge), 4);
  EXPECT_EQ(exit_code(ErrorKind::ProblemTooLarge), 4);
  EXPECT_EQ(exit_code(ErrorKind::SolverFailure), 5);
}

TEST(Pipeline, BaselineArtifacts) {
  const RunConfig cfg = toy_config("pipe_baseline");
  std::ostringstream log;
  const Baseline b = run_baseline(cfg, log);
  const std::string caps = read_file(cfg.output_dir / "caps.csv");
  EXPECT_EQ(count_lines(caps), 24u + 1u);
  ASSERT_EQ(b.caps.cap.size(), 24u);
  for (std::size_t t = 0; t < 24; ++t)
    EXPECT_NEAR(b.caps.cap[t], 1.05 * b.per_t[t].gen_cost, 1e-9 * (1.0 + b.caps.cap[t]));
  EXPECT_TRUE(fs::exists(cfg.output_dir / "baseline.csv"));
}

TEST(Pipeline, ZeroLoadGivesZeroCaps) {
  RunConfig cfg = toy_config("pipe_zero");
  cfg.scenario.synth->load_peak = 0.0;
  cfg.scenario.synth->ctrl_peak = 0.0;
  std::ostringstream log;
  const Baseline b = run_baseline(cfg, log);
  for (double c : b.caps.cap) EXPECT_NEAR(c, 0.0, 1e-6);
}

TEST(Pipeline, PlanArtifactsAndInvariants) {
  const RunConfig cfg = toy_config("pipe_plan");
  std::ostringstream log;
  const PlanRun run = run_plan(cfg, log);
  for (const char* f : {"report.json", "trace.csv", "emissions.csv", "tree.json", "run_info.json",
                        "timing.csv", "baseline.csv", "caps.csv"})
    EXPECT_TRUE(fs::exists(cfg.output_dir / f)) << f;

  const auto rep = nlohmann::json::parse(read_file(cfg.output_dir / "report.json"));
  EXPECT_EQ(rep["config_hash"], config_hash(cfg));
  EXPECT_EQ(rep["z_star"], run.outcome.z_star.key());
  EXPECT_TRUE(rep.contains("config"));
  EXPECT_LE(rep["total_shifted"].get<double>(), rep["total_allowed"].get<double>() + 1e-9);
  EXPECT_GE(rep["delta"].get<double>(), 0.0);

  double c_opf = 0.0, c_ls = 0.0;
  for (const auto& v : rep["emission_baseline"]) c_opf += v.get<double>();
  for (const auto& v : rep["emission_plan"]) c_ls += v.get<double>();
  EXPECT_NEAR(rep["mu_redu"].get<double>(), 1.0 - c_ls / c_opf, 1e-9);
  EXPECT_GT(rep["mu_redu"].get<double>(), 0.0);

  const std::string summary = run_report(cfg.output_dir, log);
  EXPECT_FALSE(summary.empty());
  for (const char* f : {"metrics.csv", "convergence.csv", "summary.txt"})
    EXPECT_TRUE(fs::exists(cfg.output_dir / f)) << f;
  const std::string conv = read_file(cfg.output_dir / "convergence.csv");
  EXPECT_EQ(count_lines(conv), run.outcome.rounds_used + 1);
}

TEST(Pipeline, ZeroAllowedShift) {
  RunConfig cfg = toy_config("pipe_noshift");
  cfg.shift_cap_scale = 0.0;
  cfg.cap_factor = 1.0;
  std::ostringstream log;
  const PlanRun run = run_plan(cfg, log);
  EXPECT_NEAR(*run.metrics.mu_redu, 0.0, 1e-6);
  EXPECT_NEAR(run.metrics.shifted, 0.0, 1e-9);
  EXPECT_FALSE(run.metrics.mu_shift.has_value());
  const auto rep = nlohmann::json::parse(read_file(cfg.output_dir / "report.json"));
  EXPECT_EQ(rep["mu_shift"], "undefined");
}

TEST(Pipeline, TimeBudgetOverride) {
  RunConfig cfg = toy_config("pipe_override");
  Overrides ov;
  ov.rounds = 3;
  ov.seed = 12;
  ov.time_budget = 30.0;
  ov.out = cfg.output_dir / "sub";
  apply_overrides(cfg, ov);
  EXPECT_EQ(cfg.search.max_rounds, 3u);
  EXPECT_EQ(cfg.search.seed, 12u);
  EXPECT_DOUBLE_EQ(cfg.search.wall_clock_budget, 30.0);
  EXPECT_EQ(cfg.output_dir, ov.out);
}

TEST(Pipeline, ReportNeedsArtifacts) {
  const auto dir = fixtures::scratch_dir("pipe_missing");
  std::ostringstream log;
  try {
    run_report(dir, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingArtifact);
  }
}

TEST(Pipeline, EnumerateGuard) {
  RunConfig cfg = toy_config("pipe_guard");
  cfg.enumeration_guard = 2;
  std::ostringstream log;
  try {
    run_enumerate(cfg, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EnumerationTooLarge);
    EXPECT_EQ(exit_code(e.kind()), 4);
  }
}

TEST(Pipeline, EnumerateMatchesPlan) {
  const RunConfig cfg = toy_config("pipe_enum");
  std::ostringstream log;
  const OracleReport rep = run_enumerate(cfg, log);
  EXPECT_EQ(rep.evaluated_count, 3u);
  const PlanRun run = run_plan(cfg, log);
  EXPECT_EQ(run.outcome.z_star.key(), rep.best_z.key());
  EXPECT_TRUE(fs::exists(cfg.output_dir / "oracle.json"));
}

TEST(Pipeline, SynthWritesScenario) {
  const RunConfig cfg = toy_config("pipe_synth");
  std::ostringstream log;
  const fs::path p = run_synth(cfg, log);
  EXPECT_EQ(p, cfg.output_dir / "scenario.csv");
  EXPECT_EQ(count_lines(read_file(p)), 25u);
}

// ---- command-line front end ----------------------------------------------------

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SHIFTPLAN_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const auto dir = fixtures::scratch_dir("cli");
  const std::string cfg = fixtures::config_path("toy3.json").string();
  EXPECT_EQ(run_cli("baseline --config " + cfg + " --out " + (dir / "b").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "b" / "caps.csv"));
  EXPECT_EQ(run_cli("plan --config " + cfg + " --out " + (dir / "p").string() + " --rounds 50 --seed 4"), 0);
  EXPECT_EQ(run_cli("report --out " + (dir / "p").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "p" / "summary.txt"));
  EXPECT_EQ(run_cli("report --out " + (dir / "empty").string()), 3);
  EXPECT_EQ(run_cli("plan --config /no/such/file.json"), 3);
  EXPECT_EQ(run_cli("plan"), 3);
  EXPECT_EQ(run_cli("frobnicate --config " + cfg), 3);

  // infeasible baseline -> 2; guard -> 4
  const std::string bad = (dir / "bad.json").string();
  {
    std::ofstream f(bad);
    f << R"({"network": ")" << (fixtures::data_dir() / "networks" / "toy3.json").string()
      << R"(", "scenario": {"synth": {"horizon": 2, "load_peak": 5000, "res_peak": [0]}}, "budget": {"K": 1}})";
  }
  EXPECT_EQ(run_cli("baseline --config " + bad + " --out " + (dir / "bad").string()), 2);
  const std::string guarded = (dir / "guard.json").string();
  {
    std::ofstream f(guarded);
    f << R"({"network": ")" << (fixtures::data_dir() / "networks" / "toy3.json").string()
      << R"(", "scenario": {"synth": {"horizon": 2, "load_peak": 50, "res_peak": [0]}}, "budget": {"K": 1},
             "enumeration_guard": 1})";
  }
  EXPECT_EQ(run_cli("enumerate --config " + guarded + " --out " + (dir / "g").string()), 4);
}
