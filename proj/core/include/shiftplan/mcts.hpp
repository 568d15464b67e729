#ifndef SHIFTPLAN_MCTS_HPP
#define SHIFTPLAN_MCTS_HPP

#include "shiftplan/dispatch.hpp"
#include "shiftplan/ipt.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace shiftplan {

enum class RewardNormalization { RunningMinMax, FixedRange };

std::string_view to_string(RewardNormalization mode) noexcept;

struct SearchConfig {
  double rho = std::sqrt(2.0);
  std::size_t max_rounds = 500;
  double wall_clock_budget = std::numeric_limits<double>::infinity();  // seconds
  std::size_t convergence_window = 20;
  std::uint64_t seed = 0;
  RewardNormalization normalization = RewardNormalization::RunningMinMax;
  // Reward range used by FixedRange (rewards are negative objectives).
  double reward_min = -1.0;
  double reward_max = 0.0;
};

/// Throws InvalidParams on rho < 0, K_max < 1, W < 1, a non-positive budget
/// or an empty fixed range.
void validate_search_config(const SearchConfig& cfg);

enum class StopReason { Converged, Exhausted, MaxRounds, WallClock };

std::string_view to_string(StopReason reason) noexcept;

struct TraceRecord {
  std::size_t round = 0;
  LocationVector z;  // terminal z evaluated this round
  double objective = 0.0;
  double best_so_far = 0.0;
  std::size_t infeasible_leaves = 0;  // leaves pruned during this round
  bool cached = false;                // objective served from the evaluation cache
};

struct SearchOutcome {
  LocationVector z_star;
  double best_objective = std::numeric_limits<double>::infinity();
  std::size_t rounds_used = 0;
  bool converged = false;
  std::optional<std::size_t> converged_round;
  StopReason stop_reason = StopReason::MaxRounds;
  std::vector<TraceRecord> trace;
  std::vector<double> round_seconds;  // elapsed wall time at the end of each round
  std::size_t evaluations = 0;        // distinct leaves evaluated
  std::size_t pruned_leaves = 0;      // distinct infeasible leaves
  std::optional<SearchTree> tree;
};

/// Objective of a terminal z, or nullopt when some step is infeasible.
using LeafEvaluator = std::function<std::optional<double>(const LocationVector&)>;

/// UCB score: v_hat + rho * sqrt(ln(n_parent) / n_child). Needs both counts >= 1.
double ucb(double v_hat, std::uint64_t n_parent, std::uint64_t n_child, double rho);

/// Adds one visit and `reward` to every node on `path`.
void backpropagate(SearchTree& tree, const std::vector<NodeId>& path, double reward);

/// Flags `id` removed and walks up, removing each parent whose children are
/// all removed. Returns every node removed, starting with `id`.
std::vector<NodeId> prune(SearchTree& tree, NodeId id);

/// Greedy path from the root by maximal visit count (ties to lowest id).
std::vector<NodeId> greedy_path(const SearchTree& tree);

/// Select / expand / simulate / backpropagate until convergence, exhaustion,
/// the round limit or the wall-clock budget. Throws NoFeasiblePlan once every
/// leaf is known infeasible.
SearchOutcome search(const Budget& budget, std::size_t n_buses, const LeafEvaluator& evaluate,
                     const SearchConfig& cfg);

/// Same, with leaves evaluated by the per-step dispatch under `caps`.
SearchOutcome search(const DispatchModel& model, const Budget& budget, const CostCaps& caps,
                     const SearchConfig& cfg, const WorkerPool& pool);

}  // namespace shiftplan

#endif  // SHIFTPLAN_MCTS_HPP
