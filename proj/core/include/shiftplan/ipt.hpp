#ifndef SHIFTPLAN_IPT_HPP
#define SHIFTPLAN_IPT_HPP

#include "shiftplan/grid.hpp"
#include "shiftplan/location.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace shiftplan {

/// Siting limits: at most `max_locations` buses and alpha'z <= max_investment.
/// `priority` lists every bus once, most prioritized first.
struct Budget {
  std::size_t max_locations = 1;
  double max_investment = std::numeric_limits<double>::infinity();
  std::vector<double> alpha;
  std::vector<BusIndex> priority;
};

/// Fills defaults (zero alpha, priority by descending bus index) and checks
/// K >= 1, alpha >= 0 and that priority is a permutation. Throws InvalidParams.
Budget make_budget(std::size_t n_buses, std::size_t max_locations,
                   double max_investment = std::numeric_limits<double>::infinity(),
                   std::vector<double> alpha = {}, std::vector<BusIndex> priority = {});

/// Position of every bus in the priority order (0 = most prioritized).
std::vector<std::size_t> priority_positions(const Budget& budget);

/// True when `z` satisfies the cardinality and investment limits.
bool within_budget(const LocationVector& z, const Budget& budget);

/// True when no further bus can be added without breaking the budget.
bool is_maximal(const LocationVector& z, const Budget& budget);

/// Priority position of the most prioritized selected bus; nullopt when empty.
std::optional<std::size_t> top_rank(const LocationVector& z, const Budget& budget);

/// Children under the priority rule: add one bus that outranks every bus
/// already selected, keep the budget, and keep at least one maximal feasible
/// set reachable below. Ordered by priority. Empty exactly when `z` is maximal.
std::vector<LocationVector> children(const LocationVector& z, const Budget& budget);

/// Every maximal feasible location vector, once each, in depth-first order.
/// Throws EnumerationTooLarge when there are more than `guard` leaves.
std::vector<LocationVector> enumerate_leaves(const Budget& budget, std::size_t n_buses,
                                             std::size_t guard = 1'000'000);

/// Leaf count, stopping early once it exceeds `limit`.
std::size_t count_leaves(const Budget& budget, std::size_t n_buses, std::size_t limit);

/// True iff descendant - ancestor is elementwise non-negative.
/// Throws DimensionMismatch when the sizes differ.
bool contains(const LocationVector& ancestor, const LocationVector& descendant);

using NodeId = std::size_t;

struct TreeNode {
  LocationVector state;
  std::optional<NodeId> parent;
  std::vector<NodeId> children;
  bool expanded = false;
  bool terminal = false;
  std::uint64_t visits = 0;  // N
  double value = 0.0;        // V, sum of raw rewards
  bool removed = false;
};

/// Arena of search nodes. Nodes are appended and flagged removed, never erased.
class SearchTree {
 public:
  SearchTree(Budget budget, std::size_t n_buses);

  NodeId root() const noexcept { return 0; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const TreeNode& node(NodeId id) const { return nodes_.at(id); }
  TreeNode& node(NodeId id) { return nodes_.at(id); }
  const Budget& budget() const noexcept { return budget_; }
  std::size_t n_buses() const noexcept { return n_buses_; }

  /// Materializes all children of `id` with zero statistics (no-op if done).
  const std::vector<NodeId>& expand(NodeId id);

  /// Live children of an expanded node.
  std::vector<NodeId> live_children(NodeId id) const;

  /// JSON snapshot: per node id, z, N, V, removed, terminal and child ids.
  std::string snapshot_json() const;

 private:
  NodeId add(LocationVector state, std::optional<NodeId> parent);

  Budget budget_;
  std::size_t n_buses_;
  std::vector<TreeNode> nodes_;
};

}  // namespace shiftplan

#endif  // SHIFTPLAN_IPT_HPP
