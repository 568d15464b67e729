#include "shiftplan/qp.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace shiftplan::qp {

namespace {

using Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinScaling = 1e-4;
constexpr double kMaxScaling = 1e4;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kRhoEqualityScale = 1e3;
constexpr double kPolishDelta = 1e-7;
constexpr double kTiny = 1e-30;

double inf_norm(const VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

VectorXd column_norms(const SparseMatrix& m) {
  VectorXd out = VectorXd::Zero(m.cols());
  for (Eigen::Index j = 0; j < m.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(m, j); it; ++it)
      out(j) = std::max(out(j), std::abs(it.value()));
  return out;
}

VectorXd row_norms(const SparseMatrix& m) {
  VectorXd out = VectorXd::Zero(m.rows());
  for (Eigen::Index j = 0; j < m.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(m, j); it; ++it)
      out(it.row()) = std::max(out(it.row()), std::abs(it.value()));
  return out;
}

double limit_scaling(double v) {
  if (v < kMinScaling) return 1.0;
  return std::min(v, kMaxScaling);
}

VectorXd project(const VectorXd& v, const VectorXd& l, const VectorXd& u) {
  return v.cwiseMax(l).cwiseMin(u);
}

bool is_equality(double l, double u) { return l == u; }

/// Problem data after Ruiz equilibration: P = c D P0 D, q = c D q0,
/// A = E A0 D, bounds E l0 / E u0.
struct Scaled {
  SparseMatrix P;
  SparseMatrix A;
  SparseMatrix At;
  VectorXd q, l, u;
  VectorXd D, E;
  double c = 1.0;
};

Scaled equilibrate(const Problem& prob, int iterations) {
  Scaled s;
  s.P = prob.P;
  s.A = prob.A;
  s.q = prob.q;
  const auto n = prob.P.cols();
  const auto m = prob.A.rows();
  s.D = VectorXd::Ones(n);
  s.E = VectorXd::Ones(m);

  for (int k = 0; k < iterations; ++k) {
    const VectorXd cp = column_norms(s.P);
    const VectorXd ca = column_norms(s.A);
    VectorXd delta(n);
    for (Eigen::Index j = 0; j < n; ++j)
      delta(j) = 1.0 / std::sqrt(limit_scaling(std::max(cp(j), ca(j))));
    const VectorXd ra = row_norms(s.A);
    VectorXd e(m);
    for (Eigen::Index i = 0; i < m; ++i) e(i) = 1.0 / std::sqrt(limit_scaling(ra(i)));

    s.P = delta.asDiagonal() * s.P * delta.asDiagonal();
    s.A = e.asDiagonal() * s.A * delta.asDiagonal();
    s.q = delta.cwiseProduct(s.q);
    s.D = s.D.cwiseProduct(delta);
    s.E = s.E.cwiseProduct(e);

    const VectorXd cp2 = column_norms(s.P);
    const double mean_p = n ? cp2.mean() : 0.0;
    const double gamma = 1.0 / limit_scaling(std::max(mean_p, inf_norm(s.q)));
    s.P *= gamma;
    s.q *= gamma;
    s.c *= gamma;
  }
  s.l = s.E.cwiseProduct(prob.l);
  s.u = s.E.cwiseProduct(prob.u);
  s.At = s.A.transpose();
  return s;
}

/// True when (x, y) satisfies the stopping test on the unscaled problem.
bool meets_tolerance(const Problem& prob, const VectorXd& x, const VectorXd& y, double eps_abs,
                     double eps_rel) {
  const VectorXd ax = prob.A * x;
  const VectorXd z = project(ax, prob.l, prob.u);
  const double prim = inf_norm(ax - z);
  const double prim_scale = std::max(inf_norm(ax), inf_norm(z));
  const VectorXd px = prob.P * x;
  const VectorXd aty = prob.A.transpose() * y;
  const double dual = inf_norm(px + prob.q + aty);
  const double dual_scale = std::max({inf_norm(px), inf_norm(aty), inf_norm(prob.q)});
  return prim <= eps_abs + eps_rel * prim_scale && dual <= eps_abs + eps_rel * dual_scale;
}

struct Candidate {
  VectorXd x;  // scaled
  VectorXd y;  // scaled
};

enum class Side { Free, Lower, Upper, Both };

/// Equality-constrained QP on a fixed active set. Returns the stacked
/// (x, multipliers of active rows) or nothing if the KKT system is singular.
std::optional<VectorXd> solve_active(const Scaled& s, const std::vector<Side>& side, int refine_iter) {
  const auto n = s.P.cols();
  const auto m = s.A.rows();
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(m), -1);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (side[static_cast<std::size_t>(i)] != Side::Free) slot[static_cast<std::size_t>(i)] = k++;

  std::vector<Triplet> reg, exact;
  for (Eigen::Index j = 0; j < s.P.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(s.P, j); it; ++it) {
      reg.emplace_back(it.row(), it.col(), it.value());
      exact.emplace_back(it.row(), it.col(), it.value());
    }
  for (Eigen::Index j = 0; j < n; ++j) reg.emplace_back(j, j, kPolishDelta);
  for (Eigen::Index j = 0; j < s.A.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(s.A, j); it; ++it) {
      const auto r = slot[static_cast<std::size_t>(it.row())];
      if (r < 0) continue;
      for (auto* t : {&reg, &exact}) {
        t->emplace_back(n + r, it.col(), it.value());
        t->emplace_back(it.col(), n + r, it.value());
      }
    }
  for (Eigen::Index r = 0; r < k; ++r) reg.emplace_back(n + r, n + r, -kPolishDelta);

  SparseMatrix kkt(n + k, n + k), kkt0(n + k, n + k);
  kkt.setFromTriplets(reg.begin(), reg.end());
  kkt0.setFromTriplets(exact.begin(), exact.end());
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(kkt);
  if (ldlt.info() != Eigen::Success) return std::nullopt;

  VectorXd rhs(n + k);
  rhs.head(n) = -s.q;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto r = slot[static_cast<std::size_t>(i)];
    if (r >= 0) rhs(n + r) = side[static_cast<std::size_t>(i)] == Side::Upper ? s.u(i) : s.l(i);
  }
  VectorXd sol = ldlt.solve(rhs);
  for (int it = 0; it < refine_iter; ++it) sol += ldlt.solve(VectorXd(rhs - kkt0 * sol));
  if (!sol.allFinite()) return std::nullopt;
  return sol;
}

/// Solves the equality-constrained QP on the active set guessed from (z, y),
/// then corrects the guess a few times: rows whose multiplier has the wrong
/// sign are released, violated rows are fixed at the bound they cross.
std::optional<Candidate> polish(const Scaled& s, const VectorXd& z, const VectorXd& y,
                                int refine_iter, double sign_tol) {
  const auto n = s.P.cols();
  const auto m = s.A.rows();

  std::vector<Side> side(static_cast<std::size_t>(m), Side::Free);
  for (Eigen::Index i = 0; i < m; ++i) {
    auto& sd = side[static_cast<std::size_t>(i)];
    if (is_equality(s.l(i), s.u(i))) sd = Side::Both;
    else if (z(i) - s.l(i) < -y(i)) sd = Side::Lower;
    else if (s.u(i) - z(i) < y(i)) sd = Side::Upper;
  }

  const int max_corrections = static_cast<int>(std::min<Eigen::Index>(m, 25)) + 1;
  for (int round = 0; round < max_corrections; ++round) {
    const auto sol = solve_active(s, side, refine_iter);
    if (!sol) return std::nullopt;
    const VectorXd x = sol->head(n);

    Eigen::Index k = 0;
    double ymax = 1.0;
    for (Eigen::Index i = 0; i < m; ++i)
      if (side[static_cast<std::size_t>(i)] != Side::Free) ymax = std::max(ymax, std::abs((*sol)(n + k++)));

    Candidate out;
    out.x = x;
    out.y = VectorXd::Zero(m);
    Eigen::Index worst_sign = -1, worst_viol = -1;
    double worst_sign_v = sign_tol * ymax, worst_viol_v = 0.0;
    const VectorXd ax = s.A * x;
    k = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Side sd = side[static_cast<std::size_t>(i)];
      if (sd == Side::Free) {
        const double viol = std::max(s.l(i) - ax(i), ax(i) - s.u(i));
        const double tol = 1e-9 * std::max(1.0, std::abs(ax(i)));
        if (viol > tol && viol > worst_viol_v) {
          worst_viol_v = viol;
          worst_viol = i;
        }
        continue;
      }
      double yi = (*sol)(n + k++);
      if (sd == Side::Lower) {
        if (yi > worst_sign_v) {
          worst_sign_v = yi;
          worst_sign = i;
        }
        yi = std::min(yi, 0.0);
      } else if (sd == Side::Upper) {
        if (-yi > worst_sign_v) {
          worst_sign_v = -yi;
          worst_sign = i;
        }
        yi = std::max(yi, 0.0);
      }
      out.y(i) = yi;
    }
    if (worst_sign < 0 && worst_viol < 0) return out;
    if (worst_sign >= 0) {
      side[static_cast<std::size_t>(worst_sign)] = Side::Free;
    } else {
      side[static_cast<std::size_t>(worst_viol)] = ax(worst_viol) < s.l(worst_viol) ? Side::Lower : Side::Upper;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Status status) noexcept {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::PrimalInfeasible: return "primal_infeasible";
    case Status::DualInfeasible: return "dual_infeasible";
    case Status::MaxIterations: return "max_iterations";
    case Status::NumericalError: return "numerical_error";
  }
  return "unknown";
}

Residuals evaluate(const Problem& prob, const VectorXd& x, const VectorXd& y) {
  Residuals r;
  const VectorXd ax = prob.A * x;
  r.primal = inf_norm(ax - project(ax, prob.l, prob.u));
  const VectorXd px = prob.P * x;
  r.dual = inf_norm(px + prob.q + prob.A.transpose() * y);
  r.objective = 0.5 * x.dot(px) + prob.q.dot(x);
  return r;
}

Result AdmmSolver::solve(const Problem& prob) const {
  const Settings& cfg = settings_;
  const auto n = prob.P.cols();
  const auto m = prob.A.rows();

  Result result;
  if (prob.P.rows() != n || prob.q.size() != n || prob.A.cols() != n || prob.l.size() != m ||
      prob.u.size() != m) {
    result.status = Status::NumericalError;
    return result;
  }
  for (Eigen::Index i = 0; i < m; ++i)
    if (prob.l(i) > prob.u(i)) {
      // Empty interval: trivially infeasible.
      result.status = Status::PrimalInfeasible;
      return result;
    }

  const Scaled s = equilibrate(prob, cfg.scaling_iters);
  const VectorXd Dinv = s.D.cwiseInverse();
  const VectorXd Einv = s.E.cwiseInverse();

  auto finish = [&](Status status, const VectorXd& xs, const VectorXd& ys, int iter,
                    bool polished) {
    result.status = status;
    result.iterations = iter;
    result.polished = polished;
    result.x = s.D.cwiseProduct(xs);
    result.y = s.E.cwiseProduct(ys) / s.c;
    const Residuals r = evaluate(prob, result.x, result.y);
    result.objective = r.objective;
    result.primal_residual = r.primal;
    result.dual_residual = r.dual;
    return result;
  };

  auto unscaled_ok = [&](const VectorXd& xs, const VectorXd& ys) {
    return meets_tolerance(prob, s.D.cwiseProduct(xs), s.E.cwiseProduct(ys) / s.c, cfg.eps_abs,
                           cfg.eps_rel);
  };

  auto try_polish = [&](const VectorXd& z, const VectorXd& y) -> std::optional<Candidate> {
    if (!cfg.polish) return std::nullopt;
    auto cand = polish(s, z, y, cfg.polish_refine_iter, std::max(cfg.eps_abs, 1e-9));
    if (cand && unscaled_ok(cand->x, cand->y)) return cand;
    return std::nullopt;
  };

  double rho = cfg.rho;
  VectorXd rho_vec(m);
  auto set_rho = [&] {
    for (Eigen::Index i = 0; i < m; ++i) {
      if (is_equality(s.l(i), s.u(i)))
        rho_vec(i) = std::min(kRhoEqualityScale * rho, kRhoMax);
      else if (s.l(i) == -kInf && s.u(i) == kInf)
        rho_vec(i) = kRhoMin;
      else
        rho_vec(i) = rho;
    }
  };
  set_rho();

  Eigen::SimplicialLLT<SparseMatrix> llt;
  SparseMatrix identity(n, n);
  identity.setIdentity();
  auto factor = [&] {
    const SparseMatrix kkt =
        s.P + cfg.sigma * identity + SparseMatrix(s.At * rho_vec.asDiagonal() * s.A);
    llt.compute(kkt);
    return llt.info() == Eigen::Success;
  };
  if (!factor()) {
    result.status = Status::NumericalError;
    return result;
  }

  VectorXd x = VectorXd::Zero(n);
  VectorXd z = VectorXd::Zero(m);
  VectorXd y = VectorXd::Zero(m);
  double polish_level = std::max(cfg.polish_trigger, cfg.eps_rel);
  int adapt_interval = 5 * cfg.check_interval;
  int next_adapt = adapt_interval;

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    const VectorXd x_prev = x;
    const VectorXd z_prev = z;
    const VectorXd y_prev = y;

    const VectorXd rhs = cfg.sigma * x - s.q + s.At * (rho_vec.cwiseProduct(z) - y);
    const VectorXd xt = llt.solve(rhs);
    const VectorXd zt = s.A * xt;
    x = cfg.alpha * xt + (1.0 - cfg.alpha) * x_prev;
    const VectorXd zrel = cfg.alpha * zt + (1.0 - cfg.alpha) * z_prev;
    z = project(zrel + y.cwiseQuotient(rho_vec), s.l, s.u);
    y = y + rho_vec.cwiseProduct(zrel - z);

    if (!x.allFinite() || !y.allFinite()) return finish(Status::NumericalError, x, y, iter, false);

    if (iter % cfg.check_interval != 0 && iter != cfg.max_iter) continue;

    // Convergence, measured on the unscaled problem.
    const VectorXd ax = s.A * x;
    const VectorXd px = s.P * x;
    const VectorXd aty = s.At * y;
    const double prim = inf_norm(Einv.cwiseProduct(ax - z));
    const double prim_scale =
        std::max(inf_norm(Einv.cwiseProduct(ax)), inf_norm(Einv.cwiseProduct(z)));
    const double dual = inf_norm(Dinv.cwiseProduct(px + s.q + aty)) / s.c;
    const double dual_scale = std::max({inf_norm(Dinv.cwiseProduct(px)),
                                        inf_norm(Dinv.cwiseProduct(aty)),
                                        inf_norm(Dinv.cwiseProduct(s.q))}) /
                              s.c;
    auto converged = [&](double eps_abs, double eps_rel) {
      return prim <= eps_abs + eps_rel * prim_scale && dual <= eps_abs + eps_rel * dual_scale;
    };

    if (converged(cfg.eps_abs, cfg.eps_rel)) {
      if (auto cand = try_polish(z, y)) return finish(Status::Optimal, cand->x, cand->y, iter, true);
      return finish(Status::Optimal, x, y, iter, false);
    }
    if (cfg.polish && polish_level > cfg.eps_rel && converged(polish_level, polish_level)) {
      if (auto cand = try_polish(z, y)) return finish(Status::Optimal, cand->x, cand->y, iter, true);
      polish_level *= 0.1;
    }

    // Primal infeasibility certificate from the dual step.
    VectorXd dy = y - y_prev;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (s.u(i) == kInf) dy(i) = std::min(dy(i), 0.0);
      if (s.l(i) == -kInf) dy(i) = std::max(dy(i), 0.0);
    }
    const double dy_norm = inf_norm(s.E.cwiseProduct(dy));
    if (dy_norm > kTiny) {
      double support = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (dy(i) > 0.0) support += s.u(i) * dy(i);
        if (dy(i) < 0.0) support += s.l(i) * dy(i);
      }
      if (support < -cfg.eps_prim_inf * dy_norm &&
          inf_norm(Dinv.cwiseProduct(s.At * dy)) < cfg.eps_prim_inf * dy_norm)
        return finish(Status::PrimalInfeasible, x, y, iter, false);
    }

    // Dual infeasibility (unbounded objective) certificate from the primal step.
    const VectorXd dx = x - x_prev;
    const double dx_norm = inf_norm(s.D.cwiseProduct(dx));
    if (dx_norm > kTiny) {
      const double tol = cfg.eps_dual_inf * dx_norm;
      bool certificate = inf_norm(Dinv.cwiseProduct(s.P * dx)) / s.c <= tol &&
                         s.q.dot(dx) / s.c < -tol;
      if (certificate) {
        const VectorXd adx = Einv.cwiseProduct(s.A * dx);
        for (Eigen::Index i = 0; i < m && certificate; ++i) {
          if (s.u(i) < kInf && adx(i) > tol) certificate = false;
          if (s.l(i) > -kInf && adx(i) < -tol) certificate = false;
        }
      }
      if (certificate) return finish(Status::DualInfeasible, x, y, iter, false);
    }

    if (cfg.adaptive_rho && iter >= next_adapt) {
      next_adapt = iter + adapt_interval;
      const double prim_n = inf_norm(ax - z) / std::max({inf_norm(ax), inf_norm(z), kTiny});
      const double dual_n = inf_norm(px + s.q + aty) /
                            std::max({inf_norm(px), inf_norm(aty), inf_norm(s.q), kTiny});
      const double rho_new =
          std::clamp(rho * std::sqrt(prim_n / std::max(dual_n, kTiny)), kRhoMin, kRhoMax);
      if (rho_new > 5.0 * rho || rho_new < rho / 5.0) {
        rho = rho_new;
        // Back off so rho cannot cycle between two values forever.
        adapt_interval *= 2;
        set_rho();
        if (!factor()) return finish(Status::NumericalError, x, y, iter, false);
      }
    }
  }

  if (auto cand = try_polish(z, y))
    return finish(Status::Optimal, cand->x, cand->y, cfg.max_iter, true);
  return finish(Status::MaxIterations, x, y, cfg.max_iter, false);
}

}  // namespace shiftplan::qp
