#ifndef SHIFTPLAN_GRID_HPP
#define SHIFTPLAN_GRID_HPP

#include <Eigen/Sparse>

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace shiftplan {

using BusIndex = std::size_t;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct Line {
  BusIndex from = 0;
  BusIndex to = 0;
  double susceptance = 0.0;  // p.u.
  double limit = 0.0;        // MW
};

/// Fuel-fired unit. Emission is a*p^2 + b*p [tCO2/h], generation cost w*p [$/h].
struct FuelGenerator {
  std::string name;
  BusIndex bus = 0;
  double p_max = 0.0;
  double emission_a = 0.0;
  double emission_b = 0.0;
  double cost = 0.0;
};

/// Renewable unit; curtailed energy is charged emission_r [tCO2/MWh].
struct RenewableUnit {
  std::string name;
  BusIndex bus = 0;
  double emission_r = 0.0;
};

/// Emission attributed to a bus-level load shift x: c*x^2 + d*x.
struct ShiftEmission {
  double quadratic = 0.0;
  double linear = 0.0;
};

/// Unvalidated description of a network; turned into a Network by build_network.
struct NetworkSpec {
  std::string name;
  double base_mva = 100.0;
  std::vector<std::string> bus_names;
  BusIndex slack_bus = 0;
  BusIndex hub_bus = 0;
  std::vector<Line> lines;
  std::vector<FuelGenerator> fuel_gens;
  std::vector<RenewableUnit> res_units;
  std::vector<BusIndex> ctrl_load_buses;
  std::vector<ShiftEmission> shift_emission;  // per bus; empty means all zero
};

/// Validated, immutable network model.
class Network {
 public:
  const std::string& name() const noexcept { return spec_.name; }
  double base_mva() const noexcept { return spec_.base_mva; }
  std::size_t n_buses() const noexcept { return spec_.bus_names.size(); }
  std::size_t n_lines() const noexcept { return spec_.lines.size(); }
  std::size_t n_fuel_gens() const noexcept { return spec_.fuel_gens.size(); }
  std::size_t n_res_units() const noexcept { return spec_.res_units.size(); }
  std::size_t n_ctrl_loads() const noexcept { return spec_.ctrl_load_buses.size(); }
  BusIndex slack_bus() const noexcept { return spec_.slack_bus; }
  BusIndex hub_bus() const noexcept { return spec_.hub_bus; }

  const std::vector<std::string>& bus_names() const noexcept { return spec_.bus_names; }
  const std::vector<Line>& lines() const noexcept { return spec_.lines; }
  const std::vector<FuelGenerator>& fuel_gens() const noexcept { return spec_.fuel_gens; }
  const std::vector<RenewableUnit>& res_units() const noexcept { return spec_.res_units; }
  const std::vector<BusIndex>& ctrl_load_buses() const noexcept { return spec_.ctrl_load_buses; }
  const std::vector<ShiftEmission>& shift_emission() const noexcept { return spec_.shift_emission; }

  /// Index of the bus called `name`; throws InvalidIndex if there is none.
  BusIndex bus_index(std::string_view name) const;

 private:
  friend Network build_network(NetworkSpec spec);
  explicit Network(NetworkSpec spec) : spec_(std::move(spec)) {}

  NetworkSpec spec_;
};

/// Validates `spec` and returns the network.
/// Throws Error{InvalidIndex | NonPositiveParameter | DisconnectedGraph}.
Network build_network(NetworkSpec spec);

/// Parses the JSON network description (see docs/formats.md).
Network parse_network(std::string_view json_text);
Network load_network(const std::filesystem::path& path);

/// Column c of the flow matrices belongs to bus angle_buses[c] (every bus but
/// the slack). Column c of the shift basis belongs to shift_buses[c] (every bus
/// but the hub).
struct GridMatrices {
  SparseMatrix gen_placement;   // n x G
  SparseMatrix res_placement;   // n x R
  SparseMatrix ctrl_placement;  // n x d
  SparseMatrix flow_injection;  // n x (n-1), "C"
  SparseMatrix line_flow;       // m x (n-1), "K"
  SparseMatrix shift_basis;     // n x (n-1), "M"
  std::vector<BusIndex> angle_buses;
  std::vector<BusIndex> shift_buses;
};

struct FlowMatrices {
  SparseMatrix flow_injection;
  SparseMatrix line_flow;
  std::vector<BusIndex> angle_buses;
};

/// Flow variables are non-slack bus angles scaled by the MVA base, so that
/// line_flow * f is in MW. Row l of line_flow is b_l (e_from - e_to); the
/// injection map is -(incidence^T diag(b) incidence) on non-slack columns,
/// which puts C f on the generation side of the nodal balance.
/// Throws SingularNetwork when removing the slack leaves the angles undetermined.
FlowMatrices flow_matrices(const Network& net);

/// Star basis about the hub: one column per non-hub bus i with +1 at row i and
/// -1 at the hub row, so every column sums to zero.
SparseMatrix shift_basis(const Network& net);

GridMatrices build_grid_matrices(const Network& net);

}  // namespace shiftplan

#endif  // SHIFTPLAN_GRID_HPP
