#include "shiftplan/oracle.hpp"

#include "shiftplan/error.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>

namespace shiftplan {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::ordered_json bus_list(const LocationVector& z, const Network& net) {
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z.selected(i)) arr.push_back(net.bus_names()[i]);
  return arr;
}

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

OracleReport enumerate_optimal(const DispatchModel& model, const Budget& budget,
                               const CostCaps& caps, const WorkerPool& pool, std::size_t guard) {
  const auto leaves = enumerate_leaves(budget, model.network().n_buses(), guard);
  OracleReport rep;
  rep.rows.resize(leaves.size());
  rep.evaluated_count = leaves.size();
  const WorkerPool inline_pool(1);
  pool.parallel_for(leaves.size(), [&](std::size_t k) {
    const auto ev = evaluate_plan(model, leaves[k], caps, inline_pool);
    auto& row = rep.rows[k];
    row.z = leaves[k];
    row.feasible = ev.feasible;
    row.objective = ev.total_emission;
    row.cost = ev.total_cost;
    row.first_infeasible_step = ev.first_infeasible_step;
  });

  bool found = false;
  for (const auto& row : rep.rows) {
    if (row.feasible && (!found || row.objective < rep.best_objective)) {
      rep.best_objective = row.objective;
      rep.best_z = row.z;
      found = true;
    }
  }
  if (!found)
    throw Error(ErrorKind::NoFeasiblePlan,
                "all " + std::to_string(leaves.size()) + " candidate location vectors are infeasible",
                "budget");
  return rep;
}

std::string oracle_report_json(const OracleReport& report, const Network& net) {
  nlohmann::ordered_json doc;
  doc["best_z"] = report.best_z.key();
  doc["best_buses"] = bus_list(report.best_z, net);
  doc["best_objective"] = report.best_objective;
  doc["evaluated_count"] = report.evaluated_count;
  std::size_t feasible = 0;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json j;
    j["z"] = r.z.key();
    j["buses"] = bus_list(r.z, net);
    j["feasible"] = r.feasible;
    j["objective"] = number_or_null(r.objective);
    j["cost"] = number_or_null(r.cost);
    j["first_infeasible_step"] = r.first_infeasible_step
                                     ? nlohmann::ordered_json(*r.first_infeasible_step)
                                     : nlohmann::ordered_json(nullptr);
    rows.push_back(std::move(j));
    if (r.feasible) ++feasible;
  }
  doc["feasible_count"] = feasible;
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

// Per step the variables are [p_gen (G) | p_cur (R) | theta (n) | s (n)], where
// s is the load received at each bus. Rows per step: balance (n), slack angle
// (1), shift sums to zero (1), lines (m), gen (G), cur (R), shift bounds (n),
// cost cap (1).
MonolithicResult solve_monolithic(const Network& net, const Scenario& sc, const LocationVector& z,
                                  const CostCaps& caps, qp::Settings settings,
                                  std::size_t var_guard) {
  validate_scenario(sc, net);
  const std::size_t T = sc.horizon();
  if (z.size() != net.n_buses())
    throw Error(ErrorKind::DimensionMismatch, "location vector does not match the network", "z");
  if (caps.cap.size() != T)
    throw Error(ErrorKind::DimensionMismatch, "cost caps do not cover the horizon", "caps");

  using Idx = Eigen::Index;
  const auto n = static_cast<Idx>(net.n_buses());
  const auto m = static_cast<Idx>(net.n_lines());
  const auto G = static_cast<Idx>(net.n_fuel_gens());
  const auto R = static_cast<Idx>(net.n_res_units());
  const Idx nv = G + R + 2 * n;
  const Idx nr = n + 2 + m + G + R + n + 1;
  const std::size_t total_vars = T * static_cast<std::size_t>(nv);
  if (total_vars > var_guard)
    throw Error(ErrorKind::ProblemTooLarge,
                std::to_string(total_vars) + " variables exceed the limit of " +
                    std::to_string(var_guard),
                "horizon");

  const Idx N = static_cast<Idx>(T) * nv;
  const Idx M = static_cast<Idx>(T) * nr;
  const double dt = sc.dt_hours;
  const double base = net.base_mva();

  std::vector<Eigen::Triplet<double>> a, h;
  qp::Problem p;
  p.q = Eigen::VectorXd::Zero(N);
  p.l.resize(M);
  p.u.resize(M);

  for (std::size_t t = 0; t < T; ++t) {
    const Idx c0 = static_cast<Idx>(t) * nv;
    const Idx gen = c0, cur = c0 + G, th = cur + R, sh = th + n;
    const Idx r0 = static_cast<Idx>(t) * nr;
    const Idx r_bal = r0, r_ref = r0 + n, r_sum = r_ref + 1, r_line = r_sum + 1,
              r_gen = r_line + m, r_cur = r_gen + G, r_shift = r_cur + R, r_cap = r_shift + n;
    const auto ti = static_cast<Idx>(t);

    // gen - cur - base * (B theta) - s = load + hosted - res
    Eigen::VectorXd rhs = sc.base_load.row(ti).transpose();
    const Eigen::VectorXd hosted = hosted_ctrl_load(sc, net, t);
    const Eigen::VectorXd headroom = shift_headroom(sc, net, t);
    rhs += hosted;
    for (Idx k = 0; k < G; ++k) {
      const auto& g = net.fuel_gens()[static_cast<std::size_t>(k)];
      a.emplace_back(r_bal + static_cast<Idx>(g.bus), gen + k, 1.0);
      a.emplace_back(r_gen + k, gen + k, 1.0);
      a.emplace_back(r_cap, gen + k, g.cost);
      if (g.emission_a != 0.0) h.emplace_back(gen + k, gen + k, 2.0 * dt * g.emission_a);
      p.q(gen + k) = dt * g.emission_b;
      p.l(r_gen + k) = 0.0;
      p.u(r_gen + k) = g.p_max;
    }
    for (Idx k = 0; k < R; ++k) {
      const auto& r = net.res_units()[static_cast<std::size_t>(k)];
      const double avail = sc.res_avail(ti, k);
      a.emplace_back(r_bal + static_cast<Idx>(r.bus), cur + k, -1.0);
      a.emplace_back(r_cur + k, cur + k, 1.0);
      rhs(static_cast<Idx>(r.bus)) -= avail;
      p.q(cur + k) = dt * r.emission_r;
      p.l(r_cur + k) = 0.0;
      p.u(r_cur + k) = avail;
    }
    for (Idx l = 0; l < m; ++l) {
      const auto& line = net.lines()[static_cast<std::size_t>(l)];
      const auto f = static_cast<Idx>(line.from), to = static_cast<Idx>(line.to);
      const double w = base * line.susceptance;
      // outflow at `from`, inflow at `to`
      a.emplace_back(r_bal + f, th + f, -w);
      a.emplace_back(r_bal + f, th + to, w);
      a.emplace_back(r_bal + to, th + to, -w);
      a.emplace_back(r_bal + to, th + f, w);
      a.emplace_back(r_line + l, th + f, w);
      a.emplace_back(r_line + l, th + to, -w);
      p.l(r_line + l) = -line.limit;
      p.u(r_line + l) = line.limit;
    }
    a.emplace_back(r_ref, th + static_cast<Idx>(net.slack_bus()), 1.0);
    p.l(r_ref) = p.u(r_ref) = 0.0;
    for (Idx i = 0; i < n; ++i) {
      a.emplace_back(r_bal + i, sh + i, -1.0);
      a.emplace_back(r_sum, sh + i, 1.0);
      a.emplace_back(r_shift + i, sh + i, 1.0);
      const bool open = z.selected(static_cast<BusIndex>(i));
      p.l(r_shift + i) = open ? -hosted(i) : 0.0;
      p.u(r_shift + i) = open ? headroom(i) : 0.0;
      const auto& ce = net.shift_emission()[static_cast<std::size_t>(i)];
      if (ce.quadratic != 0.0) h.emplace_back(sh + i, sh + i, 2.0 * dt * ce.quadratic);
      p.q(sh + i) = dt * ce.linear;
    }
    p.l(r_sum) = p.u(r_sum) = 0.0;
    p.l.segment(r_bal, n) = rhs;
    p.u.segment(r_bal, n) = rhs;
    p.l(r_cap) = -kInf;
    p.u(r_cap) = caps.cap[t] + 1e-7;
  }
  p.A.resize(M, N);
  p.A.setFromTriplets(a.begin(), a.end());
  p.P.resize(N, N);
  p.P.setFromTriplets(h.begin(), h.end());

  qp::Result r = qp::AdmmSolver(settings).solve(p);
  if (r.status == qp::Status::MaxIterations || r.status == qp::Status::NumericalError) {
    settings.eps_abs *= 0.1;
    settings.eps_rel *= 0.1;
    settings.max_iter *= 4;
    r = qp::AdmmSolver(settings).solve(p);
  }
  MonolithicResult out;
  out.status = r.status;
  out.n_vars = total_vars;
  if (r.status == qp::Status::PrimalInfeasible) {
    out.objective = kNaN;
    return out;
  }
  if (r.status != qp::Status::Optimal)
    throw Error(ErrorKind::SolverFailure,
                "monolithic problem: solver returned " + std::string(qp::to_string(r.status)));
  out.feasible = true;
  out.objective = r.objective;
  return out;
}

}  // namespace shiftplan
