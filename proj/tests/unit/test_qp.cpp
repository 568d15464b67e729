#include "shiftplan/qp.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace shiftplan;
using fixtures::active_set_solve;
using fixtures::DenseQp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

qp::Problem to_sparse(const DenseQp& d) {
  qp::Problem p;
  p.P = d.P.sparseView();
  p.q = d.q;
  p.A = d.A.sparseView();
  p.l = d.l;
  p.u = d.u;
  return p;
}

// Random feasible QP: box-bounded variables plus a few general rows built
// around a known interior point.
DenseQp random_qp(std::mt19937_64& rng, int n, int m_general, bool lp) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.2, 2.0);
  DenseQp d;
  if (lp) {
    d.P = Eigen::MatrixXd::Zero(n, n);
  } else {
    Eigen::MatrixXd L(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) L(i, j) = nd(rng);
    d.P = L * L.transpose() * 0.5;
    // occasionally rank-deficient
    if (nd(rng) > 0.5) {
      const Eigen::VectorXd v = L.col(0);
      d.P = v * v.transpose();
    }
  }
  d.q.resize(n);
  for (int i = 0; i < n; ++i) d.q(i) = nd(rng);
  const int m = n + m_general;
  d.A = Eigen::MatrixXd::Zero(m, n);
  d.l.resize(m);
  d.u.resize(m);
  Eigen::VectorXd x0(n);
  for (int i = 0; i < n; ++i) x0(i) = nd(rng) * 0.5;
  for (int i = 0; i < n; ++i) {
    d.A(i, i) = 1.0;
    d.l(i) = x0(i) - ud(rng);
    d.u(i) = x0(i) + ud(rng);
  }
  for (int r = n; r < m; ++r) {
    for (int j = 0; j < n; ++j) d.A(r, j) = nd(rng);
    const double v = d.A.row(r).dot(x0);
    const int kind = static_cast<int>(rng() % 4);
    if (kind == 0) {
      d.l(r) = d.u(r) = v;  // equality
    } else if (kind == 1) {
      d.l(r) = -kInf;
      d.u(r) = v + 0.1 * ud(rng);
    } else {
      d.l(r) = v - 0.1 * ud(rng);
      d.u(r) = kind == 2 ? kInf : v + ud(rng);
    }
  }
  return d;
}

}  // namespace

TEST(Qp, MatchesActiveSetOracleOnRandomProblems) {
  std::mt19937_64 rng(2024);
  const qp::AdmmSolver solver;
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const int mg = 1 + static_cast<int>(rng() % 3);
    const bool lp = trial % 3 == 0;
    const DenseQp d = random_qp(rng, n, mg, lp);
    const auto ref = active_set_solve(d);
    ASSERT_TRUE(ref.has_value()) << "trial " << trial;
    const qp::Result r = solver.solve(to_sparse(d));
    ASSERT_EQ(r.status, qp::Status::Optimal) << "trial " << trial;
    EXPECT_NEAR(r.objective, ref->objective, 1e-6 * (1.0 + std::abs(ref->objective)))
        << "trial " << trial;
    if (!lp) {
      // strictly convex cases have a unique minimizer
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.P);
      if (es.eigenvalues().minCoeff() > 1e-3)
        EXPECT_LE((r.x - ref->x).lpNorm<Eigen::Infinity>(), 1e-5) << "trial " << trial;
    }
    ++checked;
  }
  EXPECT_EQ(checked, 60);
}

TEST(Qp, KktResidualsBelowTolerance) {
  std::mt19937_64 rng(99);
  const qp::AdmmSolver solver;
  for (int trial = 0; trial < 20; ++trial) {
    const DenseQp d = random_qp(rng, 4, 3, trial % 2 == 0);
    const qp::Problem p = to_sparse(d);
    const qp::Result r = solver.solve(p);
    ASSERT_EQ(r.status, qp::Status::Optimal);
    const qp::Residuals res = qp::evaluate(p, r.x, r.y);
    // data is O(1), so absolute bounds are meaningful
    EXPECT_LE(res.primal, 1e-6);
    EXPECT_LE(res.dual, 1e-6);
  }
}

TEST(Qp, CertifiesPrimalInfeasibility) {
  DenseQp d;
  d.P = Eigen::MatrixXd::Identity(2, 2);
  d.q = Eigen::VectorXd::Zero(2);
  d.A.resize(3, 2);
  d.A << 1, 0, 0, 1, 1, 1;
  d.l.resize(3);
  d.u.resize(3);
  d.l << 0, 0, 5;
  d.u << 1, 1, kInf;
  EXPECT_FALSE(active_set_solve(d).has_value());
  EXPECT_EQ(qp::AdmmSolver().solve(to_sparse(d)).status, qp::Status::PrimalInfeasible);
}

TEST(Qp, CertifiesUnboundedness) {
  DenseQp d;
  d.P = Eigen::MatrixXd::Zero(2, 2);
  d.q = Eigen::VectorXd::Constant(2, -1.0);
  d.A = Eigen::MatrixXd::Identity(2, 2);
  d.l = Eigen::VectorXd::Zero(2);
  d.u = Eigen::VectorXd::Constant(2, kInf);
  EXPECT_EQ(qp::AdmmSolver().solve(to_sparse(d)).status, qp::Status::DualInfeasible);
}

TEST(Qp, EqualityOnlyProblem) {
  // min x^2 + y^2 s.t. x + y = 2  ->  (1, 1)
  DenseQp d;
  d.P = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  d.q = Eigen::VectorXd::Zero(2);
  d.A = Eigen::MatrixXd::Ones(1, 2);
  d.l = d.u = Eigen::VectorXd::Constant(1, 2.0);
  const qp::Result r = qp::AdmmSolver().solve(to_sparse(d));
  ASSERT_EQ(r.status, qp::Status::Optimal);
  EXPECT_NEAR(r.x(0), 1.0, 1e-7);
  EXPECT_NEAR(r.x(1), 1.0, 1e-7);
  EXPECT_NEAR(r.objective, 2.0, 1e-7);
}

TEST(Qp, LinearProgramVertex) {
  // min -x - 2y s.t. x + y <= 4, x <= 3, 0 <= x, y, y <= 3  ->  (1, 3), -7
  DenseQp d;
  d.P = Eigen::MatrixXd::Zero(2, 2);
  d.q.resize(2);
  d.q << -1, -2;
  d.A.resize(3, 2);
  d.A << 1, 1, 1, 0, 0, 1;
  d.l.resize(3);
  d.u.resize(3);
  d.l << -kInf, 0, 0;
  d.u << 4, 3, 3;
  const qp::Result r = qp::AdmmSolver().solve(to_sparse(d));
  ASSERT_EQ(r.status, qp::Status::Optimal);
  EXPECT_NEAR(r.objective, -7.0, 1e-7);
  EXPECT_NEAR(r.x(0), 1.0, 1e-6);
  EXPECT_NEAR(r.x(1), 3.0, 1e-6);
}

TEST(Qp, StatusNames) {
  EXPECT_EQ(qp::to_string(qp::Status::Optimal), "optimal");
  EXPECT_EQ(qp::to_string(qp::Status::PrimalInfeasible), "primal_infeasible");
}
