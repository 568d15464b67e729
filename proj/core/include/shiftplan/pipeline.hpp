#ifndef SHIFTPLAN_PIPELINE_HPP
#define SHIFTPLAN_PIPELINE_HPP

#include "shiftplan/config.hpp"
#include "shiftplan/dispatch.hpp"
#include "shiftplan/error.hpp"
#include "shiftplan/mcts.hpp"
#include "shiftplan/oracle.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace shiftplan {

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> time_budget;
  std::optional<std::size_t> rounds;
  std::optional<std::filesystem::path> out;
};

void apply_overrides(RunConfig& cfg, const Overrides& ov);

/// 0 success, 2 infeasible, 3 validation, 4 guard exceeded, 5 solver failure.
int exit_code(ErrorKind kind) noexcept;

/// Ratios are empty when their denominator is zero (below kZeroEnergy).
struct PlanMetrics {
  double c_opf = 0.0;  // tCO2, cost-optimal dispatch without shifting
  double c_ls = 0.0;   // tCO2, with shifting at z_star
  double delta = 0.0;
  std::optional<double> mu_redu, mu_allow, mu_shift;
  double shifted = 0.0;  // S, MWh
  double allowed = 0.0;  // L, MWh
};

inline constexpr double kZeroEnergy = 1e-6;

PlanMetrics compute_metrics(double c_opf, double c_ls, double shifted, double allowed);

Baseline run_baseline(const RunConfig& cfg, std::ostream& log);

struct PlanRun {
  Baseline baseline;
  SearchOutcome outcome;
  PlanEvaluation plan;
  PlanMetrics metrics;
};

/// Baseline, caps, search and artifacts: report.json, trace.csv,
/// emissions.csv, tree.json, run_info.json, timing.csv (plus the baseline files).
PlanRun run_plan(const RunConfig& cfg, std::ostream& log);

/// Exhaustive oracle; writes oracle.json.
OracleReport run_enumerate(const RunConfig& cfg, std::ostream& log);

/// Reads plan artifacts in `dir`, writes metrics.csv, convergence.csv and
/// summary.txt, and returns the summary text. Throws MissingArtifact.
std::string run_report(const std::filesystem::path& dir, std::ostream& log);

/// Writes the configured scenario as `<output_dir>/scenario.csv`.
std::filesystem::path run_synth(const RunConfig& cfg, std::ostream& log);

}  // namespace shiftplan

#endif  // SHIFTPLAN_PIPELINE_HPP
