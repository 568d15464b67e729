#include "shiftplan/error.hpp"
#include "shiftplan/grid.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <random>

using namespace shiftplan;
using fixtures::data_dir;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m); }

Eigen::Index rank_of(const SparseMatrix& m) {
  return Eigen::FullPivLU<Eigen::MatrixXd>(dense(m)).rank();
}

}  // namespace

TEST(Grid, TriangleCounts) {
  const Network net = build_network(fixtures::triangle_spec());
  EXPECT_EQ(net.n_buses(), 3u);
  EXPECT_EQ(net.n_lines(), 3u);
  EXPECT_EQ(net.n_fuel_gens(), 1u);
  EXPECT_EQ(net.n_res_units(), 1u);
}

TEST(Grid, LineToMissingBusIsInvalidIndex) {
  Network ieee = load_network(data_dir() / "networks" / "ieee14.json");
  NetworkSpec s;
  s.bus_names = ieee.bus_names();
  s.lines = ieee.lines();
  s.lines.push_back({0, 99, 1.0, 10.0});
  EXPECT_EQ(kind_of([&] { build_network(s); }), ErrorKind::InvalidIndex);
}

TEST(Grid, ValidationErrors) {
  auto s = fixtures::triangle_spec();
  s.lines[1].susceptance = 0.0;
  EXPECT_EQ(kind_of([&] { build_network(s); }), ErrorKind::NonPositiveParameter);

  s = fixtures::triangle_spec();
  s.lines[0].limit = -1.0;
  EXPECT_EQ(kind_of([&] { build_network(s); }), ErrorKind::NonPositiveParameter);

  s = fixtures::triangle_spec();
  s.fuel_gens[0].p_max = -5.0;
  EXPECT_EQ(kind_of([&] { build_network(s); }), ErrorKind::NonPositiveParameter);

  s = fixtures::triangle_spec();
  s.bus_names.push_back("B3");  // isolated
  EXPECT_EQ(kind_of([&] { build_network(s); }), ErrorKind::DisconnectedGraph);

  s = fixtures::triangle_spec();
  s.slack_bus = 7;
  EXPECT_EQ(kind_of([&] { build_network(s); }), ErrorKind::InvalidIndex);

  s = fixtures::triangle_spec();
  s.hub_bus = 3;
  EXPECT_EQ(kind_of([&] { build_network(s); }), ErrorKind::InvalidIndex);
}

TEST(Grid, ErrorCarriesFieldPath) {
  auto s = fixtures::triangle_spec();
  s.lines[2].to = 9;
  try {
    build_network(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(e.field().find("lines[2]"), std::string::npos) << e.field();
  }
}

TEST(Grid, Ieee14MatchesPublishedCounts) {
  const Network net = load_network(data_dir() / "networks" / "ieee14.json");
  EXPECT_EQ(net.n_buses(), 14u);
  EXPECT_EQ(net.n_lines(), 20u);
  EXPECT_EQ(net.n_fuel_gens(), 5u);
  EXPECT_EQ(net.n_res_units(), 5u);
  EXPECT_EQ(net.n_ctrl_loads(), 10u);

  const GridMatrices g = build_grid_matrices(net);
  EXPECT_EQ(g.gen_placement.rows(), 14);
  EXPECT_EQ(g.gen_placement.cols(), 5);
  EXPECT_EQ(g.res_placement.cols(), 5);
  EXPECT_EQ(g.ctrl_placement.cols(), 10);
  EXPECT_EQ(g.flow_injection.rows(), 14);
  EXPECT_EQ(g.flow_injection.cols(), 13);
  EXPECT_EQ(g.line_flow.rows(), 20);
  EXPECT_EQ(g.line_flow.cols(), 13);
  EXPECT_EQ(g.shift_basis.rows(), 14);
  EXPECT_EQ(g.shift_basis.cols(), 13);
}

TEST(Grid, PlacementColumnsAreUnitVectors) {
  const Network net = load_network(data_dir() / "networks" / "ieee14.json");
  const GridMatrices g = build_grid_matrices(net);
  for (const SparseMatrix* m : {&g.gen_placement, &g.res_placement, &g.ctrl_placement}) {
    const Eigen::MatrixXd d = dense(*m);
    for (Eigen::Index c = 0; c < d.cols(); ++c) {
      EXPECT_EQ((d.col(c).array() != 0.0).count(), 1);
      EXPECT_DOUBLE_EQ(d.col(c).sum(), 1.0);
    }
  }
  EXPECT_DOUBLE_EQ(dense(g.gen_placement)(1, 1), 1.0);  // coal2 at B2
}

TEST(Grid, TwoBusFlowMatrices) {
  NetworkSpec s;
  s.bus_names = {"a", "b"};
  s.lines = {{0, 1, 1.0, 10.0}};
  const Network net = build_network(s);
  const FlowMatrices fm = flow_matrices(net);
  const Eigen::MatrixXd K = dense(fm.line_flow), C = dense(fm.flow_injection);
  ASSERT_EQ(K.rows(), 1);
  ASSERT_EQ(K.cols(), 1);
  EXPECT_DOUBLE_EQ(K(0, 0), -1.0);
  ASSERT_EQ(C.rows(), 2);
  EXPECT_DOUBLE_EQ(C(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(C(1, 0), -1.0);
  EXPECT_DOUBLE_EQ(C.col(0).sum(), 0.0);
}

TEST(Grid, InjectionColumnsSumToZero) {
  for (const char* name : {"toy3.json", "case6.json", "ieee14.json"}) {
    const Network net = load_network(data_dir() / "networks" / name);
    const Eigen::MatrixXd C = dense(flow_matrices(net).flow_injection);
    EXPECT_LT(C.colwise().sum().cwiseAbs().maxCoeff(), 1e-12) << name;
  }
}

TEST(Grid, FlowsMatchDenseSolveOnTriangle) {
  const Network net = build_network(fixtures::triangle_spec());
  const FlowMatrices fm = flow_matrices(net);
  Eigen::VectorXd p(3);
  p << 1.0, -1.0, 0.0;
  const Eigen::VectorXd ref = fixtures::dense_dc_flows(net, p);
  // nodal balance with injections p: -C f = p
  const Eigen::MatrixXd C = dense(fm.flow_injection);
  const Eigen::VectorXd f = (-C).colPivHouseholderQr().solve(p);
  const Eigen::VectorXd flows = dense(fm.line_flow) * f;
  for (Eigen::Index l = 0; l < 3; ++l) EXPECT_NEAR(flows(l), ref(l), 1e-12);
  // unit susceptances: 2/3 on the direct line, 1/3 around
  EXPECT_NEAR(ref(0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(ref(1), -1.0 / 3.0, 1e-12);
  EXPECT_NEAR(ref(2), 1.0 / 3.0, 1e-12);
}

TEST(Grid, FlowsMatchDenseSolveOnRandomInjections) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd(0.0, 50.0);
  for (const char* name : {"toy3.json", "case6.json", "ieee14.json"}) {
    const Network net = load_network(data_dir() / "networks" / name);
    const FlowMatrices fm = flow_matrices(net);
    const Eigen::MatrixXd C = dense(fm.flow_injection), K = dense(fm.line_flow);
    const auto n = static_cast<Eigen::Index>(net.n_buses());
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd p(n);
      for (Eigen::Index i = 0; i < n; ++i) p(i) = nd(rng);
      p.array() -= p.mean();
      const Eigen::VectorXd ref = fixtures::dense_dc_flows(net, p);
      const Eigen::VectorXd f = (-C).colPivHouseholderQr().solve(p);
      const Eigen::VectorXd got = K * f;
      EXPECT_LE((got - ref).lpNorm<Eigen::Infinity>(), 1e-9 * (1.0 + ref.lpNorm<Eigen::Infinity>()))
          << name;
    }
  }
}

TEST(Grid, FlowMatrixRank) {
  const Network net = load_network(data_dir() / "networks" / "ieee14.json");
  const GridMatrices g = build_grid_matrices(net);
  EXPECT_EQ(rank_of(g.line_flow), 13);
  EXPECT_EQ(rank_of(g.shift_basis), 13);
}

TEST(Grid, ShiftBasisThreeBusHubOne) {
  auto s = fixtures::triangle_spec();
  s.hub_bus = 1;
  const Eigen::MatrixXd M = dense(shift_basis(build_network(s)));
  Eigen::MatrixXd expect(3, 2);
  expect << 1, 0, -1, -1, 0, 1;
  EXPECT_EQ(M, expect);
}

TEST(Grid, ShiftBasisTwoBus) {
  NetworkSpec s;
  s.bus_names = {"a", "b"};
  s.lines = {{0, 1, 1.0, 10.0}};
  const Eigen::MatrixXd M = dense(shift_basis(build_network(s)));
  ASSERT_EQ(M.rows(), 2);
  ASSERT_EQ(M.cols(), 1);
  EXPECT_DOUBLE_EQ(M(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(M(1, 0), 1.0);
}

TEST(Grid, ShiftBasisColumnsSumToZero) {
  for (const char* name : {"toy3.json", "case6.json", "ieee14.json"}) {
    const Network net = load_network(data_dir() / "networks" / name);
    const Eigen::MatrixXd M = dense(shift_basis(net));
    EXPECT_EQ(M.colwise().sum().cwiseAbs().maxCoeff(), 0.0) << name;
  }
}

TEST(Grid, ParseRejectsUnknownBusName) {
  const std::string text = R"({"buses":["A","B"],"lines":[{"from":"A","to":"Z","susceptance":1,"limit":5}]})";
  EXPECT_THROW(parse_network(text), Error);
}

TEST(Grid, BusLookup) {
  const Network net = load_network(data_dir() / "networks" / "case6.json");
  EXPECT_EQ(net.bus_index("B3"), 2u);
  EXPECT_EQ(kind_of([&] { net.bus_index("nope"); }), ErrorKind::InvalidIndex);
}
