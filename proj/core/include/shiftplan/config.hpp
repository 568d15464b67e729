#ifndef SHIFTPLAN_CONFIG_HPP
#define SHIFTPLAN_CONFIG_HPP

#include "shiftplan/grid.hpp"
#include "shiftplan/ipt.hpp"
#include "shiftplan/mcts.hpp"
#include "shiftplan/qp.hpp"
#include "shiftplan/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shiftplan {

/// Bus-keyed value list as written in a config: either one entry per bus, a
/// scalar applied to every bus, or a {bus name: value} map (others default).
struct BusValues {
  std::optional<double> scalar;
  std::vector<double> list;
  std::vector<std::pair<std::string, double>> by_name;
  bool empty() const noexcept { return !scalar && list.empty() && by_name.empty(); }
};

struct ScenarioSource {
  std::optional<std::filesystem::path> file;  // resolved
  std::string file_text;                      // as written in the config
  std::optional<SynthParams> synth;
  BusValues load_weights, expansion;          // resolved against the network later
  std::vector<std::pair<std::string, double>> res_peak_by_name;
  std::uint64_t synth_seed = 0;
};

struct BudgetConfig {
  std::size_t max_locations = 1;
  std::optional<double> max_investment;  // none = unlimited
  BusValues alpha;
  std::string priority_rule = "descending-index";  // or "ascending-index", "list"
  std::vector<std::string> priority;               // bus names or indices, rule "list"
};

struct RunConfig {
  std::filesystem::path config_dir;
  std::filesystem::path network_path;  // resolved
  std::string network_text;            // as written
  ScenarioSource scenario;
  double shift_cap_scale = 1.0;
  BudgetConfig budget;
  double cap_factor = 1.05;
  SearchConfig search;
  qp::Settings solver;
  std::size_t workers = 1;
  std::filesystem::path output_dir = "out";
  std::size_t enumeration_guard = 1'000'000;
  std::size_t monolithic_guard = 100'000;
};

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Throws Config errors naming the offending field.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);

/// Reads a config file and applies SHIFTPLAN_OUTPUT_DIR / SHIFTPLAN_WORKERS.
RunConfig load_run_config(const std::filesystem::path& path);

/// Result-relevant settings as canonical JSON (no output dir or worker width).
std::string effective_config_json(const RunConfig& cfg);

/// FNV-1a 64 of effective_config_json, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Network, scenario and budget described by a config.
struct ProblemInstance {
  Network network;
  Scenario scenario;
  Budget budget;
};

ProblemInstance load_instance(const RunConfig& cfg);

/// Scenario only (for `synth`); the network must already be loaded.
Scenario build_scenario(const RunConfig& cfg, const Network& net);

/// Expands a BusValues against the network; `fallback` fills missing entries.
std::vector<double> resolve_bus_values(const BusValues& v, const Network& net, double fallback,
                                       std::string_view field);

}  // namespace shiftplan

#endif  // SHIFTPLAN_CONFIG_HPP
