#include "shiftplan/dispatch.hpp"

#include "shiftplan/error.hpp"

#include <oneapi/tbb/parallel_for.h>
#include <oneapi/tbb/task_arena.h>

#include <cmath>
#include <limits>
#include <string>

namespace shiftplan {

namespace {

using Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Absolute $/h allowance on the cost cap so that a cap equal to the LP optimum
// is not declared infeasible by round-off.
constexpr double kCapSlack = 1e-7;

struct Layout {
  Eigen::Index gen, cur, flow, shift, n_vars;
};

Layout layout_of(const Network& net) {
  const auto G = static_cast<Eigen::Index>(net.n_fuel_gens());
  const auto R = static_cast<Eigen::Index>(net.n_res_units());
  const auto nf = static_cast<Eigen::Index>(net.n_buses()) - 1;
  return {0, G, G + R, G + R + nf, G + R + 2 * nf};
}

void append(std::vector<Triplet>& out, const SparseMatrix& m, Eigen::Index row0, Eigen::Index col0,
            double scale) {
  for (Eigen::Index j = 0; j < m.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(m, j); it; ++it)
      out.emplace_back(row0 + it.row(), col0 + it.col(), scale * it.value());
}

}  // namespace

// --- WorkerPool -------------------------------------------------------------

struct WorkerPool::Arena {
  explicit Arena(int width) : arena(width) {}
  tbb::task_arena arena;
};

WorkerPool::WorkerPool(std::size_t width) : width_(width == 0 ? 1 : width) {
  if (width_ > 1) arena_ = std::make_unique<Arena>(static_cast<int>(width_));
}

WorkerPool::~WorkerPool() = default;

void WorkerPool::parallel_for(std::size_t count,
                              const std::function<void(std::size_t)>& body) const {
  if (!arena_) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  arena_->arena.execute([&] {
    tbb::parallel_for(std::size_t{0}, count, [&](std::size_t i) { body(i); });
  });
}

// --- emissions --------------------------------------------------------------

EmissionTerms emission_terms(const Network& net, const VectorXd& p_gen, const VectorXd& p_cur,
                             const VectorXd& bus_shift) {
  if (static_cast<std::size_t>(p_gen.size()) != net.n_fuel_gens() ||
      static_cast<std::size_t>(p_cur.size()) != net.n_res_units() ||
      static_cast<std::size_t>(bus_shift.size()) != net.n_buses())
    throw Error(ErrorKind::DimensionMismatch, "emission_terms: vector sizes do not match network");
  EmissionTerms e;
  for (std::size_t i = 0; i < net.n_fuel_gens(); ++i) {
    const auto& g = net.fuel_gens()[i];
    const double p = p_gen(static_cast<Eigen::Index>(i));
    e.fuel += g.emission_a * p * p + g.emission_b * p;
  }
  for (std::size_t i = 0; i < net.n_res_units(); ++i)
    e.cur += net.res_units()[i].emission_r * p_cur(static_cast<Eigen::Index>(i));
  for (std::size_t i = 0; i < net.n_buses(); ++i) {
    const auto& c = net.shift_emission()[i];
    const double x = bus_shift(static_cast<Eigen::Index>(i));
    e.shift += c.quadratic * x * x + c.linear * x;
  }
  return e;
}

// --- DispatchModel ----------------------------------------------------------

DispatchModel::DispatchModel(const Network& net, const Scenario& sc, qp::Settings settings)
    : net_(&net), sc_(&sc), mats_(build_grid_matrices(net)), settings_(settings) {
  validate_scenario(sc, net);
}

std::size_t DispatchModel::n_vars() const noexcept {
  return static_cast<std::size_t>(layout_of(*net_).n_vars);
}

namespace {

// Rows: balance (n) | lines (m) | generation (G) | curtailment (R) | shift (n) | cost cap (0/1).
qp::Problem assemble(const Network& net, const Scenario& sc, const GridMatrices& g,
                     std::size_t t, bool cost_objective, const LocationVector* z,
                     std::optional<double> cost_cap) {
  const Layout lay = layout_of(net);
  const auto n = static_cast<Eigen::Index>(net.n_buses());
  const auto m = static_cast<Eigen::Index>(net.n_lines());
  const auto G = static_cast<Eigen::Index>(net.n_fuel_gens());
  const auto R = static_cast<Eigen::Index>(net.n_res_units());
  const auto ti = static_cast<Eigen::Index>(t);

  const Eigen::Index r_bal = 0, r_line = n, r_gen = n + m, r_cur = r_gen + G, r_shift = r_cur + R;
  const Eigen::Index rows = r_shift + n + (cost_cap ? 1 : 0);

  std::vector<Triplet> a;
  append(a, g.gen_placement, r_bal, lay.gen, 1.0);
  append(a, g.res_placement, r_bal, lay.cur, -1.0);
  append(a, g.flow_injection, r_bal, lay.flow, 1.0);
  append(a, g.shift_basis, r_bal, lay.shift, -1.0);
  append(a, g.line_flow, r_line, lay.flow, 1.0);
  for (Eigen::Index i = 0; i < G; ++i) a.emplace_back(r_gen + i, lay.gen + i, 1.0);
  for (Eigen::Index i = 0; i < R; ++i) a.emplace_back(r_cur + i, lay.cur + i, 1.0);
  append(a, g.shift_basis, r_shift, lay.shift, 1.0);
  if (cost_cap)
    for (Eigen::Index i = 0; i < G; ++i)
      a.emplace_back(r_shift + n, lay.gen + i, net.fuel_gens()[static_cast<std::size_t>(i)].cost);

  qp::Problem p;
  p.A.resize(rows, lay.n_vars);
  p.A.setFromTriplets(a.begin(), a.end());
  p.l.resize(rows);
  p.u.resize(rows);

  const VectorXd hosted = hosted_ctrl_load(sc, net, t);
  const VectorXd headroom = shift_headroom(sc, net, t);
  const VectorXd res = sc.res_avail.row(ti).transpose();
  const VectorXd demand = sc.base_load.row(ti).transpose() + hosted - g.res_placement * res;
  p.l.segment(r_bal, n) = demand;
  p.u.segment(r_bal, n) = demand;
  for (Eigen::Index l = 0; l < m; ++l) {
    const double lim = net.lines()[static_cast<std::size_t>(l)].limit;
    p.l(r_line + l) = -lim;
    p.u(r_line + l) = lim;
  }
  for (Eigen::Index i = 0; i < G; ++i) {
    p.l(r_gen + i) = 0.0;
    p.u(r_gen + i) = net.fuel_gens()[static_cast<std::size_t>(i)].p_max;
  }
  p.l.segment(r_cur, R).setZero();
  p.u.segment(r_cur, R) = res;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool open = z && z->selected(static_cast<BusIndex>(i));
    p.l(r_shift + i) = open ? -hosted(i) : 0.0;
    p.u(r_shift + i) = open ? headroom(i) : 0.0;
  }
  if (cost_cap) {
    p.l(r_shift + n) = -kInf;
    p.u(r_shift + n) = *cost_cap + kCapSlack;
  }

  p.q = VectorXd::Zero(lay.n_vars);
  p.P.resize(lay.n_vars, lay.n_vars);
  if (cost_objective) {
    for (Eigen::Index i = 0; i < G; ++i)
      p.q(lay.gen + i) = net.fuel_gens()[static_cast<std::size_t>(i)].cost;
    return p;
  }

  std::vector<Triplet> h;
  for (Eigen::Index i = 0; i < G; ++i) {
    const auto& gen = net.fuel_gens()[static_cast<std::size_t>(i)];
    if (gen.emission_a != 0.0) h.emplace_back(lay.gen + i, lay.gen + i, 2.0 * gen.emission_a);
    p.q(lay.gen + i) = gen.emission_b;
  }
  for (Eigen::Index i = 0; i < R; ++i)
    p.q(lay.cur + i) = net.res_units()[static_cast<std::size_t>(i)].emission_r;

  VectorXd c(n), d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i) = net.shift_emission()[static_cast<std::size_t>(i)].quadratic;
    d(i) = net.shift_emission()[static_cast<std::size_t>(i)].linear;
  }
  const SparseMatrix mt = g.shift_basis.transpose();
  const SparseMatrix hess_shift = mt * (2.0 * c).asDiagonal() * g.shift_basis;
  append(h, hess_shift, lay.shift, lay.shift, 1.0);
  p.q.segment(lay.shift, n - 1) = mt * d;
  p.P.setFromTriplets(h.begin(), h.end());
  p.P.prune(0.0);
  return p;
}

}  // namespace

qp::Problem DispatchModel::assemble_opf(std::size_t t) const {
  return assemble(*net_, *sc_, mats_, t, true, nullptr, std::nullopt);
}

qp::Problem DispatchModel::assemble_dispatch(std::size_t t, const LocationVector& z,
                                             std::optional<double> cost_cap) const {
  if (z.size() != net_->n_buses())
    throw Error(ErrorKind::DimensionMismatch,
                "location vector has " + std::to_string(z.size()) + " entries for " +
                    std::to_string(net_->n_buses()) + " buses");
  return assemble(*net_, *sc_, mats_, t, false, &z, cost_cap);
}

DispatchResult DispatchModel::solve(const qp::Problem& problem, std::size_t t) const {
  qp::Result r = qp::AdmmSolver(settings_).solve(problem);
  if (r.status == qp::Status::MaxIterations || r.status == qp::Status::NumericalError) {
    qp::Settings tighter = settings_;
    tighter.eps_abs *= 0.1;
    tighter.eps_rel *= 0.1;
    tighter.max_iter *= 4;
    r = qp::AdmmSolver(tighter).solve(problem);
  }

  DispatchResult out;
  out.iterations = r.iterations;
  if (r.status == qp::Status::PrimalInfeasible) {
    out.status = DispatchStatus::Infeasible;
    return out;
  }
  if (r.status != qp::Status::Optimal)
    throw Error(ErrorKind::SolverFailure, "step " + std::to_string(t) + ": solver returned " +
                                              std::string(qp::to_string(r.status)) + " after " +
                                              std::to_string(r.iterations) + " iterations");

  const Layout lay = layout_of(*net_);
  const auto nf = lay.shift - lay.flow;
  out.status = DispatchStatus::Optimal;
  out.p_gen = r.x.segment(lay.gen, lay.cur - lay.gen);
  out.p_cur = r.x.segment(lay.cur, lay.flow - lay.cur);
  out.flow = r.x.segment(lay.flow, nf);
  out.shift = r.x.segment(lay.shift, nf);
  out.bus_shift = mats_.shift_basis * out.shift;
  const EmissionTerms e = emission_terms(*net_, out.p_gen, out.p_cur, out.bus_shift);
  out.emission_fuel = e.fuel;
  out.emission_cur = e.cur;
  out.emission_shift = e.shift;
  out.objective = e.total();
  for (std::size_t i = 0; i < net_->n_fuel_gens(); ++i)
    out.gen_cost += net_->fuel_gens()[i].cost * out.p_gen(static_cast<Eigen::Index>(i));
  out.primal_residual = r.primal_residual;
  out.dual_residual = r.dual_residual;
  return out;
}

DispatchResult DispatchModel::solve_opf(std::size_t t) const {
  return solve(assemble_opf(t), t);
}

DispatchResult DispatchModel::solve_dispatch(std::size_t t, const LocationVector& z,
                                             std::optional<double> cost_cap) const {
  return solve(assemble_dispatch(t, z, cost_cap), t);
}

// --- free operations --------------------------------------------------------

DispatchResult solve_opf(const DispatchModel& model, std::size_t t) { return model.solve_opf(t); }

Baseline compute_baseline(const DispatchModel& model, double factor, const WorkerPool& pool) {
  if (!(factor >= 1.0) || !std::isfinite(factor))
    throw Error(ErrorKind::InvalidParams, "cost cap factor must be at least 1", "cap_factor");
  const std::size_t T = model.scenario().horizon();
  Baseline b;
  b.per_t.resize(T);
  pool.parallel_for(T, [&](std::size_t t) { b.per_t[t] = model.solve_opf(t); });

  b.caps.factor = factor;
  b.caps.cap.resize(T);
  const double dt = model.scenario().dt_hours;
  for (std::size_t t = 0; t < T; ++t) {
    const auto& r = b.per_t[t];
    if (!r.optimal())
      throw Error(ErrorKind::BaselineInfeasible,
                  "no dispatch satisfies line and generation limits at step " + std::to_string(t),
                  "t=" + std::to_string(t));
    b.caps.cap[t] = factor * std::max(r.gen_cost, 0.0);
    b.total_emission += dt * r.objective;
    b.total_cost += dt * r.gen_cost;
  }
  return b;
}

CostCaps compute_cost_caps(const DispatchModel& model, double factor, const WorkerPool& pool) {
  return compute_baseline(model, factor, pool).caps;
}

DispatchResult solve_dispatch_qp(const DispatchModel& model, std::size_t t,
                                 const LocationVector& z, const CostCaps& caps) {
  if (t >= caps.cap.size())
    throw Error(ErrorKind::DimensionMismatch, "no cost cap for step " + std::to_string(t));
  return model.solve_dispatch(t, z, caps.cap[t]);
}

PlanEvaluation evaluate_plan(const DispatchModel& model, const LocationVector& z,
                             const CostCaps& caps, const WorkerPool& pool) {
  const std::size_t T = model.scenario().horizon();
  if (caps.cap.size() != T)
    throw Error(ErrorKind::DimensionMismatch, "cost caps do not cover the horizon");

  PlanEvaluation ev;
  ev.z = z;
  ev.per_t.resize(T);
  pool.parallel_for(T, [&](std::size_t t) { ev.per_t[t] = model.solve_dispatch(t, z, caps.cap[t]); });

  const double dt = model.scenario().dt_hours;
  const Network& net = model.network();
  ev.feasible = true;
  for (std::size_t t = 0; t < T; ++t) {
    const auto& r = ev.per_t[t];
    if (!r.optimal()) {
      ev.feasible = false;
      ev.first_infeasible_step = t;
      break;
    }
    ev.total_emission += dt * r.objective;
    ev.total_cost += dt * r.gen_cost;
    ev.total_shifted += dt * 0.5 * r.bus_shift.cwiseAbs().sum();
    const VectorXd headroom = shift_headroom(model.scenario(), net, t);
    for (std::size_t i = 0; i < net.n_buses(); ++i)
      if (z.selected(i)) ev.total_allowed += dt * headroom(static_cast<Eigen::Index>(i));
  }
  if (!ev.feasible) {
    ev.total_emission = ev.total_cost = ev.total_shifted = ev.total_allowed = kNaN;
  }
  return ev;
}

}  // namespace shiftplan
