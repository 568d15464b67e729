#ifndef SHIFTPLAN_ORACLE_HPP
#define SHIFTPLAN_ORACLE_HPP

#include "shiftplan/dispatch.hpp"
#include "shiftplan/ipt.hpp"
#include "shiftplan/qp.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace shiftplan {

inline constexpr std::size_t kEnumerationGuard = 1'000'000;  // leaves
inline constexpr std::size_t kMonolithicGuard = 100'000;     // QP variables

struct OracleRow {
  LocationVector z;
  bool feasible = false;
  double objective = 0.0;  // tCO2, NaN when infeasible
  double cost = 0.0;       // $, NaN when infeasible
  std::optional<std::size_t> first_infeasible_step;
};

struct OracleReport {
  LocationVector best_z;
  double best_objective = 0.0;
  std::size_t evaluated_count = 0;
  std::vector<OracleRow> rows;  // leaf enumeration order
};

/// Evaluates every leaf of the priority tree and returns the global optimum.
/// Throws EnumerationTooLarge past `guard` leaves and NoFeasiblePlan when no
/// leaf is feasible.
OracleReport enumerate_optimal(const DispatchModel& model, const Budget& budget,
                               const CostCaps& caps, const WorkerPool& pool,
                               std::size_t guard = kEnumerationGuard);

/// JSON text of a report, with bus names for the selected buses.
std::string oracle_report_json(const OracleReport& report, const Network& net);

struct MonolithicResult {
  qp::Status status = qp::Status::NumericalError;
  bool feasible = false;
  double objective = 0.0;  // tCO2 over the horizon, NaN when infeasible
  std::size_t n_vars = 0;
};

/// Solves one coupled QP over the whole horizon with z fixed. Built from the
/// network data directly (bus angles and bus shifts as variables), not from
/// the per-step matrices. Throws ProblemTooLarge above `var_guard` variables
/// and SolverFailure if the solver does not settle.
MonolithicResult solve_monolithic(const Network& net, const Scenario& sc, const LocationVector& z,
                                  const CostCaps& caps, qp::Settings settings = {},
                                  std::size_t var_guard = kMonolithicGuard);

}  // namespace shiftplan

#endif  // SHIFTPLAN_ORACLE_HPP
