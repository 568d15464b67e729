#ifndef SHIFTPLAN_DISPATCH_HPP
#define SHIFTPLAN_DISPATCH_HPP

#include "shiftplan/grid.hpp"
#include "shiftplan/location.hpp"
#include "shiftplan/qp.hpp"
#include "shiftplan/scenario.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace shiftplan {

enum class DispatchStatus { Optimal, Infeasible };

struct EmissionTerms {
  double fuel = 0.0;   // tCO2/h
  double cur = 0.0;    // tCO2/h
  double shift = 0.0;  // tCO2/h
  double total() const noexcept { return fuel + cur + shift; }
};

/// One timestep's dispatch. Vectors are empty when the step is infeasible.
struct DispatchResult {
  DispatchStatus status = DispatchStatus::Infeasible;
  Eigen::VectorXd p_gen;      // G, MW
  Eigen::VectorXd p_cur;      // R, MW
  Eigen::VectorXd flow;       // n-1 scaled angles; line flows are K * flow
  Eigen::VectorXd shift;      // n-1 fundamental shift
  Eigen::VectorXd bus_shift;  // n, M * shift (MW received, negative = sent)
  double emission_fuel = 0.0;
  double emission_cur = 0.0;
  double emission_shift = 0.0;
  double gen_cost = 0.0;   // $/h
  double objective = 0.0;  // tCO2/h, sum of the three emission terms
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;

  bool optimal() const noexcept { return status == DispatchStatus::Optimal; }
};

/// Per-step generation-cost caps, factor x baseline optimal cost.
struct CostCaps {
  std::vector<double> cap;  // $/h
  double factor = 1.05;
};

struct Baseline {
  std::vector<DispatchResult> per_t;
  CostCaps caps;
  double total_emission = 0.0;  // tCO2
  double total_cost = 0.0;      // $
};

struct PlanEvaluation {
  LocationVector z;
  std::vector<DispatchResult> per_t;
  bool feasible = false;
  std::optional<std::size_t> first_infeasible_step;
  // NaN unless feasible.
  double total_emission = 0.0;  // tCO2, dt * sum of step objectives
  double total_cost = 0.0;      // $
  double total_shifted = 0.0;   // MWh moved, dt * sum_t 1/2 sum_i |bus_shift_i|
  double total_allowed = 0.0;   // MWh, dt * sum_t sum_i z_i * headroom_i
};

/// Fixed-width pool that runs index ranges and writes results by index, so
/// the outcome never depends on scheduling. Width 1 runs inline.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t width = 1);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t width() const noexcept { return width_; }
  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) const;

 private:
  struct Arena;
  std::size_t width_;
  std::unique_ptr<Arena> arena_;
};

/// Emission split of a dispatch point; bus_shift is the n-vector M * dl.
EmissionTerms emission_terms(const Network& net, const Eigen::VectorXd& p_gen,
                             const Eigen::VectorXd& p_cur, const Eigen::VectorXd& bus_shift);

/// Builds and solves the per-timestep problems. Holds references to `net`
/// and `sc`, which must outlive it. Safe to use from several threads.
class DispatchModel {
 public:
  DispatchModel(const Network& net, const Scenario& sc, qp::Settings settings = {});

  const Network& network() const noexcept { return *net_; }
  const Scenario& scenario() const noexcept { return *sc_; }
  const GridMatrices& matrices() const noexcept { return mats_; }
  const qp::Settings& settings() const noexcept { return settings_; }

  /// Variable layout [p_gen | p_cur | flow | shift] of every step problem.
  std::size_t n_vars() const noexcept;

  /// Cost-minimal dispatch with no shifting (curtailment allowed).
  qp::Problem assemble_opf(std::size_t t) const;
  /// Emission-minimal dispatch with shifting gated by z and an optional cost cap.
  qp::Problem assemble_dispatch(std::size_t t, const LocationVector& z,
                                std::optional<double> cost_cap) const;

  DispatchResult solve_opf(std::size_t t) const;
  DispatchResult solve_dispatch(std::size_t t, const LocationVector& z,
                                std::optional<double> cost_cap) const;

 private:
  DispatchResult solve(const qp::Problem& problem, std::size_t t) const;

  const Network* net_;
  const Scenario* sc_;
  GridMatrices mats_;
  qp::Settings settings_;
};

DispatchResult solve_opf(const DispatchModel& model, std::size_t t);

/// Baseline dispatch for every step and the caps derived from it.
/// Throws BaselineInfeasible naming the first infeasible step.
Baseline compute_baseline(const DispatchModel& model, double factor, const WorkerPool& pool);
CostCaps compute_cost_caps(const DispatchModel& model, double factor, const WorkerPool& pool);

DispatchResult solve_dispatch_qp(const DispatchModel& model, std::size_t t,
                                 const LocationVector& z, const CostCaps& caps);

/// Solves every step independently and reduces in timestep order.
PlanEvaluation evaluate_plan(const DispatchModel& model, const LocationVector& z,
                             const CostCaps& caps, const WorkerPool& pool);

}  // namespace shiftplan

#endif  // SHIFTPLAN_DISPATCH_HPP
