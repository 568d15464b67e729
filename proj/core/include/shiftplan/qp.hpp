#ifndef SHIFTPLAN_QP_HPP
#define SHIFTPLAN_QP_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string_view>

namespace shiftplan::qp {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// minimize 1/2 x'Px + q'x  subject to  l <= Ax <= u.
/// P is symmetric positive semidefinite and stored with both triangles.
/// Infinite bounds are written as +-infinity; l_i == u_i marks an equality row.
struct Problem {
  SparseMatrix P;
  Eigen::VectorXd q;
  SparseMatrix A;
  Eigen::VectorXd l;
  Eigen::VectorXd u;
};

enum class Status {
  Optimal,
  PrimalInfeasible,  // certified: no x satisfies l <= Ax <= u
  DualInfeasible,    // certified: objective unbounded below
  MaxIterations,
  NumericalError,
};

std::string_view to_string(Status status) noexcept;

struct Settings {
  double eps_abs = 1e-7;
  double eps_rel = 1e-7;
  double eps_prim_inf = 1e-6;
  double eps_dual_inf = 1e-6;
  /// ADMM accuracy at which the first active-set polish is attempted.
  double polish_trigger = 1e-4;
  int max_iter = 40000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  int scaling_iters = 10;
  bool adaptive_rho = true;
  int check_interval = 10;
  bool polish = true;
  int polish_refine_iter = 5;
};

struct Result {
  Status status = Status::NumericalError;
  Eigen::VectorXd x;  // primal solution
  Eigen::VectorXd y;  // constraint multipliers, >= 0 on active upper bounds
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;  // ||Ax - proj(Ax)||_inf
  double dual_residual = 0.0;    // ||Px + q + A'y||_inf
  bool polished = false;
};

/// Contract for the convex QP backends used by dispatch and the oracle.
class Solver {
 public:
  virtual ~Solver() = default;
  virtual Result solve(const Problem& problem) const = 0;
};

/// Operator-splitting (ADMM) solver with Ruiz equilibration, adaptive step,
/// infeasibility certificates and active-set polishing.
class AdmmSolver final : public Solver {
 public:
  AdmmSolver() = default;
  explicit AdmmSolver(Settings settings) : settings_(settings) {}

  Result solve(const Problem& problem) const override;
  const Settings& settings() const noexcept { return settings_; }

 private:
  Settings settings_;
};

/// Unscaled residuals and objective of a candidate (x, y) for `problem`.
struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double objective = 0.0;
};
Residuals evaluate(const Problem& problem, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

}  // namespace shiftplan::qp

#endif  // SHIFTPLAN_QP_HPP
