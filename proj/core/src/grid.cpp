#include "shiftplan/grid.hpp"

#include "shiftplan/error.hpp"
#include "text_io.hpp"

#include <json.hpp>

#include <cmath>
#include <numeric>
#include <optional>
#include <queue>
#include <string>

namespace shiftplan {

namespace {

using Triplet = Eigen::Triplet<double>;

std::string at(std::string_view section, std::size_t i, std::string_view field) {
  return std::string(section) + "[" + std::to_string(i) + "]." + std::string(field);
}

void require_bus(BusIndex bus, std::size_t n, const std::string& field) {
  if (bus >= n)
    throw Error(ErrorKind::InvalidIndex,
                "bus index " + std::to_string(bus) + " outside [0, " + std::to_string(n) + ")",
                field);
}

void require_positive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw Error(ErrorKind::NonPositiveParameter, "must be positive and finite", field);
}

void require_nonnegative(double v, const std::string& field) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw Error(ErrorKind::NonPositiveParameter, "must be non-negative and finite", field);
}

// Buses reachable from `start` without passing through `skip` (if given).
std::vector<bool> reachable(std::size_t n, const std::vector<Line>& lines, BusIndex start,
                            std::optional<BusIndex> skip = std::nullopt) {
  std::vector<std::vector<BusIndex>> adj(n);
  for (const auto& l : lines) {
    adj[l.from].push_back(l.to);
    adj[l.to].push_back(l.from);
  }
  std::vector<bool> seen(n, false);
  std::queue<BusIndex> frontier;
  seen[start] = true;
  frontier.push(start);
  while (!frontier.empty()) {
    const BusIndex b = frontier.front();
    frontier.pop();
    for (BusIndex nb : adj[b]) {
      if (seen[nb] || (skip && nb == *skip)) continue;
      seen[nb] = true;
      frontier.push(nb);
    }
  }
  return seen;
}

SparseMatrix placement(std::size_t n, const std::vector<BusIndex>& buses) {
  SparseMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(buses.size()));
  std::vector<Triplet> t;
  for (std::size_t k = 0; k < buses.size(); ++k)
    t.emplace_back(static_cast<int>(buses[k]), static_cast<int>(k), 1.0);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

}  // namespace

BusIndex Network::bus_index(std::string_view name) const {
  for (std::size_t i = 0; i < spec_.bus_names.size(); ++i)
    if (spec_.bus_names[i] == name) return i;
  throw Error(ErrorKind::InvalidIndex, "unknown bus '" + std::string(name) + "'");
}

Network build_network(NetworkSpec spec) {
  const std::size_t n = spec.bus_names.size();
  if (n == 0) throw Error(ErrorKind::InvalidParams, "network has no buses", "buses");
  require_positive(spec.base_mva, "base_mva");
  require_bus(spec.slack_bus, n, "slack_bus");
  require_bus(spec.hub_bus, n, "hub_bus");

  for (std::size_t i = 0; i < spec.lines.size(); ++i) {
    const auto& l = spec.lines[i];
    require_bus(l.from, n, at("lines", i, "from"));
    require_bus(l.to, n, at("lines", i, "to"));
    if (l.from == l.to)
      throw Error(ErrorKind::InvalidIndex, "line connects a bus to itself", at("lines", i, "to"));
    require_positive(l.susceptance, at("lines", i, "susceptance"));
    require_positive(l.limit, at("lines", i, "limit"));
  }
  for (std::size_t i = 0; i < spec.fuel_gens.size(); ++i) {
    const auto& g = spec.fuel_gens[i];
    require_bus(g.bus, n, at("generators", i, "bus"));
    require_nonnegative(g.p_max, at("generators", i, "p_max"));
    require_nonnegative(g.emission_a, at("generators", i, "emission_a"));
    if (!std::isfinite(g.emission_b) || !std::isfinite(g.cost))
      throw Error(ErrorKind::InvalidParams, "non-finite coefficient", at("generators", i, "cost"));
  }
  for (std::size_t i = 0; i < spec.res_units.size(); ++i)
    require_bus(spec.res_units[i].bus, n, at("renewables", i, "bus"));
  std::vector<bool> hosts_ctrl(n, false);
  for (std::size_t i = 0; i < spec.ctrl_load_buses.size(); ++i) {
    const std::string field = "ctrl_loads[" + std::to_string(i) + "]";
    require_bus(spec.ctrl_load_buses[i], n, field);
    if (hosts_ctrl[spec.ctrl_load_buses[i]])
      throw Error(ErrorKind::InvalidIndex, "bus listed twice", field);
    hosts_ctrl[spec.ctrl_load_buses[i]] = true;
  }

  if (spec.shift_emission.empty()) spec.shift_emission.assign(n, ShiftEmission{});
  if (spec.shift_emission.size() != n)
    throw Error(ErrorKind::ShapeMismatch, "one shift emission entry per bus required",
                "coeffs");
  for (std::size_t i = 0; i < n; ++i)
    require_nonnegative(spec.shift_emission[i].quadratic, at("buses", i, "shift_c"));

  const auto seen = reachable(n, spec.lines, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (!seen[i])
      throw Error(ErrorKind::DisconnectedGraph,
                  "bus '" + spec.bus_names[i] + "' is not connected to bus '" +
                      spec.bus_names[0] + "'",
                  at("buses", i, "name"));

  return Network(std::move(spec));
}

Network parse_network(std::string_view json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, e.what(), "network");
  }

  NetworkSpec spec;
  try {
    spec.name = doc.value("name", std::string("network"));
    spec.base_mva = doc.value("base_mva", 100.0);

    const json& coeffs = doc.contains("coeffs") ? doc["coeffs"] : json::object();
    const double default_c = coeffs.value("shift_c", 0.0);
    const double default_d = coeffs.value("shift_d", 0.0);

    const json& buses = doc.at("buses");
    for (const auto& b : buses) {
      if (b.is_string()) {
        spec.bus_names.push_back(b.get<std::string>());
        spec.shift_emission.push_back({default_c, default_d});
      } else {
        spec.bus_names.push_back(b.at("name").get<std::string>());
        spec.shift_emission.push_back(
            {b.value("shift_c", default_c), b.value("shift_d", default_d)});
      }
    }

    auto bus_ref = [&](const json& ref, const std::string& field) -> BusIndex {
      if (ref.is_number_integer()) {
        const auto idx = ref.get<long long>();
        if (idx < 0) throw Error(ErrorKind::InvalidIndex, "negative bus index", field);
        return static_cast<BusIndex>(idx);
      }
      const auto name = ref.get<std::string>();
      for (std::size_t i = 0; i < spec.bus_names.size(); ++i)
        if (spec.bus_names[i] == name) return i;
      throw Error(ErrorKind::InvalidIndex, "unknown bus '" + name + "'", field);
    };

    spec.slack_bus = doc.contains("slack_bus") ? bus_ref(doc["slack_bus"], "slack_bus") : 0;
    spec.hub_bus = doc.contains("hub_bus") ? bus_ref(doc["hub_bus"], "hub_bus") : spec.slack_bus;

    const json& lines = doc.at("lines");
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto& l = lines[i];
      spec.lines.push_back({bus_ref(l.at("from"), at("lines", i, "from")),
                            bus_ref(l.at("to"), at("lines", i, "to")),
                            l.at("susceptance").get<double>(), l.at("limit").get<double>()});
    }
    const json gens = doc.value("generators", json::array());
    for (std::size_t i = 0; i < gens.size(); ++i) {
      const auto& g = gens[i];
      spec.fuel_gens.push_back({g.value("name", "G" + std::to_string(i + 1)),
                                bus_ref(g.at("bus"), at("generators", i, "bus")),
                                g.at("p_max").get<double>(), g.value("emission_a", 0.0),
                                g.value("emission_b", 0.0), g.value("cost", 0.0)});
    }
    const json res = doc.value("renewables", json::array());
    for (std::size_t i = 0; i < res.size(); ++i) {
      const auto& r = res[i];
      spec.res_units.push_back({r.value("name", "R" + std::to_string(i + 1)),
                                bus_ref(r.at("bus"), at("renewables", i, "bus")),
                                r.value("emission_r", 0.0)});
    }
    const json ctrl = doc.value("ctrl_loads", json::array());
    for (std::size_t i = 0; i < ctrl.size(); ++i)
      spec.ctrl_load_buses.push_back(bus_ref(ctrl[i], "ctrl_loads[" + std::to_string(i) + "]"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, e.what(), "network");
  }
  return build_network(std::move(spec));
}

Network load_network(const std::filesystem::path& path) {
  return parse_network(detail::read_file(path));
}

FlowMatrices flow_matrices(const Network& net) {
  const std::size_t n = net.n_buses();
  const std::size_t m = net.n_lines();
  const BusIndex slack = net.slack_bus();

  // A connected graph keeps the reduced Laplacian nonsingular; a single-bus
  // network has no angle variables at all.
  if (n > 1) {
    const BusIndex start = slack == 0 ? 1 : 0;
    const auto seen = reachable(n, net.lines(), start);
    for (std::size_t i = 0; i < n; ++i)
      if (!seen[i])
        throw Error(ErrorKind::SingularNetwork,
                    "angles undetermined: bus '" + net.bus_names()[i] + "' is isolated");
  }

  FlowMatrices out;
  std::vector<int> column(n, -1);
  for (BusIndex b = 0; b < n; ++b) {
    if (b == slack) continue;
    column[b] = static_cast<int>(out.angle_buses.size());
    out.angle_buses.push_back(b);
  }

  std::vector<Triplet> kt, ct;
  for (std::size_t l = 0; l < m; ++l) {
    const auto& line = net.lines()[l];
    const double b = line.susceptance;
    const int cf = column[line.from];
    const int cto = column[line.to];
    if (cf >= 0) {
      kt.emplace_back(static_cast<int>(l), cf, b);
      ct.emplace_back(static_cast<int>(line.from), cf, -b);
      ct.emplace_back(static_cast<int>(line.to), cf, b);
    }
    if (cto >= 0) {
      kt.emplace_back(static_cast<int>(l), cto, -b);
      ct.emplace_back(static_cast<int>(line.to), cto, -b);
      ct.emplace_back(static_cast<int>(line.from), cto, b);
    }
  }
  const auto cols = static_cast<Eigen::Index>(n - 1);
  out.line_flow.resize(static_cast<Eigen::Index>(m), cols);
  out.line_flow.setFromTriplets(kt.begin(), kt.end());
  out.flow_injection.resize(static_cast<Eigen::Index>(n), cols);
  out.flow_injection.setFromTriplets(ct.begin(), ct.end());
  return out;
}

SparseMatrix shift_basis(const Network& net) {
  const std::size_t n = net.n_buses();
  const BusIndex hub = net.hub_bus();
  SparseMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n - 1));
  std::vector<Triplet> t;
  int col = 0;
  for (BusIndex b = 0; b < n; ++b) {
    if (b == hub) continue;
    t.emplace_back(static_cast<int>(b), col, 1.0);
    t.emplace_back(static_cast<int>(hub), col, -1.0);
    ++col;
  }
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

GridMatrices build_grid_matrices(const Network& net) {
  GridMatrices g;
  const std::size_t n = net.n_buses();

  std::vector<BusIndex> buses;
  for (const auto& gen : net.fuel_gens()) buses.push_back(gen.bus);
  g.gen_placement = placement(n, buses);
  buses.clear();
  for (const auto& r : net.res_units()) buses.push_back(r.bus);
  g.res_placement = placement(n, buses);
  g.ctrl_placement = placement(n, net.ctrl_load_buses());

  auto flows = flow_matrices(net);
  g.flow_injection = std::move(flows.flow_injection);
  g.line_flow = std::move(flows.line_flow);
  g.angle_buses = std::move(flows.angle_buses);

  g.shift_basis = shift_basis(net);
  for (BusIndex b = 0; b < n; ++b)
    if (b != net.hub_bus()) g.shift_buses.push_back(b);
  return g;
}

}  // namespace shiftplan
