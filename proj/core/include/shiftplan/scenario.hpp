#ifndef SHIFTPLAN_SCENARIO_HPP
#define SHIFTPLAN_SCENARIO_HPP

#include "shiftplan/grid.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace shiftplan {

/// Exogenous time series over the planning horizon. Rows are timesteps.
struct Scenario {
  double dt_hours = 1.0;
  Eigen::MatrixXd res_avail;   // T x R, MW; also the curtailment bound
  Eigen::MatrixXd base_load;   // T x n, MW
  Eigen::MatrixXd ctrl_load;   // T x d, MW at the network's ctrl_load_buses
  Eigen::MatrixXd shift_cap;   // T x n, MW; total controllable load a bus can host

  std::size_t horizon() const noexcept { return static_cast<std::size_t>(base_load.rows()); }
};

/// Checks shapes against `net`, non-negativity and shift_cap >= D s.
/// Throws EmptyHorizon, ShapeMismatch or NegativeValue.
void validate_scenario(const Scenario& sc, const Network& net);

/// Controllable load hosted at each bus at step t (the n-vector D s_t).
Eigen::VectorXd hosted_ctrl_load(const Scenario& sc, const Network& net, std::size_t t);

/// Headroom each bus has for received load at step t: shift_cap - D s_t.
Eigen::VectorXd shift_headroom(const Scenario& sc, const Network& net, std::size_t t);

/// Reads a scenario table. The first column is the time index, headed `hour`
/// or `day`; the step length is the spacing of that index. Other columns are
/// `res_<unit>`, `load_<bus>`, `ctrl_<bus>` and `cap_<bus>`. Absent load and
/// ctrl columns read as zero; an absent cap column defaults to the hosted
/// controllable load plus `expansion[bus]` (zero when `expansion` is empty).
Scenario parse_scenario_csv(std::string_view text, const Network& net,
                            const std::vector<double>& expansion = {});
Scenario load_scenario(const std::filesystem::path& path, const Network& net,
                       const std::vector<double>& expansion = {});

/// Canonical table with every column; parse_scenario_csv reads it back exactly.
std::string scenario_to_csv(const Scenario& sc, const Network& net);
void save_scenario(const Scenario& sc, const Network& net, const std::filesystem::path& path);

struct SynthParams {
  std::size_t horizon = 24;
  double dt_hours = 1.0;  // 1 for hourly, 24 for daily (daily peaks)

  double load_peak = 0.0;            // MW, whole network
  std::vector<double> load_weights;  // per bus; empty -> uniform
  double load_diurnal_amplitude = 0.0;
  double load_seasonal_amplitude = 0.0;

  double ctrl_peak = 0.0;            // MW at t = 0, all ctrl loads
  std::vector<double> ctrl_weights;  // per ctrl load; empty -> uniform
  double ctrl_diurnal_amplitude = 0.0;
  double growth_rate = 0.0;          // annual, applied to controllable load

  std::vector<double> res_peak;      // MW per renewable unit
  double res_mean_factor = 1.0;      // mean capacity factor
  double res_diurnal_amplitude = 0.0;
  double res_seasonal_amplitude = 0.0;

  double noise = 0.0;                // relative std-dev of multiplicative noise
  std::vector<double> expansion;     // MW per bus added to hosted ctrl load for shift_cap
};

/// Seeded synthetic profiles; identical output for identical (params, seed).
/// Throws InvalidParams.
Scenario synth_scenario(const SynthParams& params, const Network& net, std::uint64_t seed);

/// Rescales the expansion headroom: shift_cap <- D s + factor (shift_cap - D s).
Scenario scale_shift_cap(const Scenario& sc, const Network& net, double factor);

}  // namespace shiftplan

#endif  // SHIFTPLAN_SCENARIO_HPP
