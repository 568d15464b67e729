#include "test_support.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace shiftplan::fixtures {

namespace fs = std::filesystem;

fs::path data_dir() { return fs::path(SHIFTPLAN_DATA_DIR); }

fs::path config_path(const std::string& name) { return data_dir() / "configs" / name; }

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "shiftplan_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Eigen::VectorXd dense_dc_flows(const Network& net, const Eigen::VectorXd& p) {
  const auto n = static_cast<Eigen::Index>(net.n_buses());
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (const auto& l : net.lines()) {
    const auto i = static_cast<Eigen::Index>(l.from), j = static_cast<Eigen::Index>(l.to);
    B(i, i) += l.susceptance;
    B(j, j) += l.susceptance;
    B(i, j) -= l.susceptance;
    B(j, i) -= l.susceptance;
  }
  const auto s = static_cast<Eigen::Index>(net.slack_bus());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != s) keep.push_back(i);
  const auto k = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd Br(k, k);
  Eigen::VectorXd pr(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    pr(a) = p(keep[a]);
    for (Eigen::Index b = 0; b < k; ++b) Br(a, b) = B(keep[a], keep[b]);
  }
  const Eigen::VectorXd th_r = Br.fullPivLu().solve(pr);
  Eigen::VectorXd th = Eigen::VectorXd::Zero(n);
  for (Eigen::Index a = 0; a < k; ++a) th(keep[a]) = th_r(a);
  Eigen::VectorXd flows(static_cast<Eigen::Index>(net.n_lines()));
  for (std::size_t l = 0; l < net.n_lines(); ++l) {
    const auto& line = net.lines()[l];
    flows(static_cast<Eigen::Index>(l)) =
        line.susceptance * (th(static_cast<Eigen::Index>(line.from)) - th(static_cast<Eigen::Index>(line.to)));
  }
  return flows;
}

std::optional<ActiveSetSolution> active_set_solve(const DenseQp& qp, double tol) {
  const Eigen::Index n = qp.q.size();
  const Eigen::Index m = qp.A.rows();
  // 0 inactive, 1 lower, 2 upper; equality rows are always "lower".
  std::vector<std::vector<int>> options(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    auto& o = options[static_cast<std::size_t>(i)];
    if (qp.l(i) == qp.u(i)) {
      o = {1};
      continue;
    }
    o.push_back(0);
    if (std::isfinite(qp.l(i))) o.push_back(1);
    if (std::isfinite(qp.u(i))) o.push_back(2);
  }
  std::vector<std::size_t> pick(static_cast<std::size_t>(m), 0);
  std::optional<ActiveSetSolution> best;

  while (true) {
    std::vector<Eigen::Index> rows;
    std::vector<int> side;
    for (Eigen::Index i = 0; i < m; ++i) {
      const int s = options[static_cast<std::size_t>(i)][pick[static_cast<std::size_t>(i)]];
      if (s != 0) {
        rows.push_back(i);
        side.push_back(s);
      }
    }
    const auto k = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    K.topLeftCorner(n, n) = qp.P;
    rhs.head(n) = -qp.q;
    for (Eigen::Index a = 0; a < k; ++a) {
      K.block(0, n + a, n, 1) = qp.A.row(rows[a]).transpose();
      K.block(n + a, 0, 1, n) = qp.A.row(rows[a]);
      rhs(n + a) = side[a] == 2 ? qp.u(rows[a]) : qp.l(rows[a]);
    }
    const Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
    bool ok = (K * sol - rhs).lpNorm<Eigen::Infinity>() <= tol * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    const Eigen::VectorXd x = sol.head(n);
    if (ok) {
      const Eigen::VectorXd ax = qp.A * x;
      for (Eigen::Index i = 0; i < m && ok; ++i) {
        const double sc = 1.0 + std::abs(ax(i));
        if (ax(i) < qp.l(i) - tol * sc || ax(i) > qp.u(i) + tol * sc) ok = false;
      }
      for (Eigen::Index a = 0; a < k && ok; ++a) {
        const double y = sol(n + a);
        const bool eq = qp.l(rows[a]) == qp.u(rows[a]);
        if (!eq && side[a] == 2 && y < -1e-7) ok = false;
        if (!eq && side[a] == 1 && y > 1e-7) ok = false;
      }
    }
    if (ok) {
      const double obj = 0.5 * x.dot(qp.P * x) + qp.q.dot(x);
      if (!best || obj < best->objective) best = ActiveSetSolution{x, obj};
    }

    std::size_t i = 0;
    for (; i < pick.size(); ++i) {
      if (++pick[i] < options[i].size()) break;
      pick[i] = 0;
    }
    if (i == pick.size()) break;
  }
  return best;
}

std::set<std::string> powerset_maximal(const Budget& budget, std::size_t n) {
  if (n > 20) throw std::invalid_argument("power set too large");
  auto feasible = [&](std::uint32_t mask) {
    std::size_t count = 0;
    double spend = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) {
        ++count;
        spend += budget.alpha.empty() ? 0.0 : budget.alpha[i];
      }
    return count <= budget.max_locations && spend <= budget.max_investment;
  };
  std::set<std::string> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (!feasible(mask)) continue;
    bool maximal = true;
    for (std::size_t i = 0; i < n && maximal; ++i)
      if (!(mask >> i & 1u) && feasible(mask | (1u << i))) maximal = false;
    if (!maximal) continue;
    std::string key(n, '0');
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) key[i] = '1';
    out.insert(key);
  }
  return out;
}

NetworkSpec triangle_spec(double limit) {
  NetworkSpec s;
  s.name = "triangle";
  s.bus_names = {"B0", "B1", "B2"};
  s.lines = {{0, 1, 1.0, limit}, {1, 2, 1.0, limit}, {0, 2, 1.0, limit}};
  s.fuel_gens = {{"g0", 0, 300.0, 0.0, 1.0, 10.0}};
  s.res_units = {{"w2", 2, 0.02}};
  s.ctrl_load_buses = {0};
  return s;
}

Network carbon_triangle() {
  NetworkSpec s;
  s.name = "carbon_triangle";
  s.bus_names = {"B0", "B1", "B2"};
  s.lines = {{0, 1, 1.0, 100.0}, {1, 2, 1.0, 20.0}, {0, 2, 1.0, 20.0}};
  s.fuel_gens = {{"coal0", 0, 200.0, 0.001, 1.0, 20.0}, {"gas1", 1, 100.0, 0.0005, 0.4, 35.0}};
  s.res_units = {{"wind2", 2, 0.02}};
  s.ctrl_load_buses = {0};
  s.shift_emission = {{0.001, 0.0}, {0.001, 0.0}, {0.001, 0.0}};
  return build_network(std::move(s));
}

Scenario carbon_triangle_scenario(std::size_t T, double wind) {
  const auto t = static_cast<Eigen::Index>(T);
  Scenario sc;
  sc.dt_hours = 1.0;
  sc.res_avail = Eigen::MatrixXd::Constant(t, 1, wind);
  sc.base_load.resize(t, 3);
  sc.ctrl_load.resize(t, 1);
  sc.shift_cap.resize(t, 3);
  for (Eigen::Index k = 0; k < t; ++k) {
    const double f = 1.0 + 0.1 * std::sin(0.5 * static_cast<double>(k));
    sc.base_load.row(k) << 30.0 * f, 20.0 * f, 10.0;
    sc.ctrl_load(k, 0) = 40.0 * f;
    sc.shift_cap.row(k) << 40.0 * f + 40.0, 40.0, 40.0;
  }
  return sc;
}

Scenario flat_scenario(const Network& net, std::size_t T, const std::vector<double>& load,
                       const std::vector<double>& res) {
  const auto t = static_cast<Eigen::Index>(T);
  const auto n = static_cast<Eigen::Index>(net.n_buses());
  Scenario sc;
  sc.res_avail = Eigen::MatrixXd::Zero(t, static_cast<Eigen::Index>(net.n_res_units()));
  sc.base_load = Eigen::MatrixXd::Zero(t, n);
  sc.ctrl_load = Eigen::MatrixXd::Zero(t, static_cast<Eigen::Index>(net.n_ctrl_loads()));
  sc.shift_cap = Eigen::MatrixXd::Zero(t, n);
  for (Eigen::Index k = 0; k < t; ++k) {
    for (Eigen::Index i = 0; i < n && static_cast<std::size_t>(i) < load.size(); ++i)
      sc.base_load(k, i) = load[static_cast<std::size_t>(i)];
    for (Eigen::Index r = 0; r < sc.res_avail.cols() && static_cast<std::size_t>(r) < res.size(); ++r)
      sc.res_avail(k, r) = res[static_cast<std::size_t>(r)];
  }
  return sc;
}

}  // namespace shiftplan::fixtures
