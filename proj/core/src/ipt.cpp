#include "shiftplan/ipt.hpp"

#include "shiftplan/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace shiftplan {

namespace {

bool fits(double cost, double limit) {
  if (std::isinf(limit)) return true;
  return cost <= limit + 1e-9 * std::max(1.0, std::abs(limit));
}

double investment(const LocationVector& z, const Budget& budget) {
  double c = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z.selected(i)) c += budget.alpha[i];
  }
  return c;
}

void check_size(const Budget& budget, std::size_t n) {
  if (budget.alpha.size() != n || budget.priority.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "budget does not match " + std::to_string(n) + " buses",
                "budget");
  }
}

// Budget never binds: every subset within K also fits B.
bool investment_slack(const Budget& budget) {
  if (std::isinf(budget.max_investment)) return true;
  const double total = std::accumulate(budget.alpha.begin(), budget.alpha.end(), 0.0);
  return fits(total, budget.max_investment);
}

// Is there T within `cands` so that z + T is feasible and maximal?
bool has_maximal_completion(const LocationVector& z, double cost, const std::vector<BusIndex>& cands,
                            const Budget& budget) {
  const std::size_t n = z.size();
  const std::size_t k = budget.max_locations;
  if (z.count() > k || !fits(cost, budget.max_investment)) return false;
  if (investment_slack(budget)) {
    return z.count() + cands.size() >= std::min(k, n);
  }
  std::vector<std::uint8_t> in(n, 0);
  for (std::size_t i = 0; i < n; ++i) in[i] = z.selected(i) ? 1 : 0;

  std::function<bool(std::size_t, std::size_t, double)> dfs = [&](std::size_t idx, std::size_t count,
                                                                   double c) -> bool {
    if (count == k) return true;
    if (idx == cands.size()) {
      for (std::size_t b = 0; b < n; ++b) {
        if (!in[b] && fits(c + budget.alpha[b], budget.max_investment)) return false;
      }
      return true;
    }
    const BusIndex b = cands[idx];
    if (fits(c + budget.alpha[b], budget.max_investment)) {
      in[b] = 1;
      const bool ok = dfs(idx + 1, count + 1, c + budget.alpha[b]);
      in[b] = 0;
      if (ok) return true;
    }
    return dfs(idx + 1, count, c);
  };
  return dfs(0, z.count(), cost);
}

}  // namespace

Budget make_budget(std::size_t n_buses, std::size_t max_locations, double max_investment,
                   std::vector<double> alpha, std::vector<BusIndex> priority) {
  if (n_buses == 0) throw Error(ErrorKind::InvalidParams, "no buses", "budget");
  if (max_locations < 1) throw Error(ErrorKind::InvalidParams, "K must be >= 1", "budget.K");
  if (std::isnan(max_investment) || max_investment < 0.0) {
    throw Error(ErrorKind::InvalidParams, "B must be >= 0", "budget.B");
  }
  if (alpha.empty()) alpha.assign(n_buses, 0.0);
  if (alpha.size() != n_buses) {
    throw Error(ErrorKind::InvalidParams, "alpha needs one entry per bus", "budget.alpha");
  }
  for (std::size_t i = 0; i < n_buses; ++i) {
    if (!std::isfinite(alpha[i]) || alpha[i] < 0.0) {
      throw Error(ErrorKind::InvalidParams, "alpha must be finite and >= 0",
                  "budget.alpha[" + std::to_string(i) + "]");
    }
  }
  if (priority.empty()) {
    priority.resize(n_buses);
    for (std::size_t i = 0; i < n_buses; ++i) priority[i] = n_buses - 1 - i;
  }
  std::vector<std::uint8_t> seen(n_buses, 0);
  if (priority.size() != n_buses) {
    throw Error(ErrorKind::InvalidParams, "priority must list every bus once", "budget.priority");
  }
  for (BusIndex b : priority) {
    if (b >= n_buses || seen[b]) {
      throw Error(ErrorKind::InvalidParams, "priority must list every bus once", "budget.priority");
    }
    seen[b] = 1;
  }
  return Budget{max_locations, max_investment, std::move(alpha), std::move(priority)};
}

std::vector<std::size_t> priority_positions(const Budget& budget) {
  std::vector<std::size_t> pos(budget.priority.size());
  for (std::size_t p = 0; p < budget.priority.size(); ++p) pos[budget.priority[p]] = p;
  return pos;
}

bool within_budget(const LocationVector& z, const Budget& budget) {
  check_size(budget, z.size());
  return z.count() <= budget.max_locations && fits(investment(z, budget), budget.max_investment);
}

bool is_maximal(const LocationVector& z, const Budget& budget) {
  check_size(budget, z.size());
  if (z.count() >= budget.max_locations) return true;
  const double cost = investment(z, budget);
  for (std::size_t b = 0; b < z.size(); ++b) {
    if (!z.selected(b) && fits(cost + budget.alpha[b], budget.max_investment)) return false;
  }
  return true;
}

std::optional<std::size_t> top_rank(const LocationVector& z, const Budget& budget) {
  check_size(budget, z.size());
  if (z.count() == 0) return std::nullopt;
  const auto pos = priority_positions(budget);
  std::size_t best = z.size();
  for (BusIndex b : z.buses()) best = std::min(best, pos[b]);
  return best;
}

std::vector<LocationVector> children(const LocationVector& z, const Budget& budget) {
  check_size(budget, z.size());
  std::vector<LocationVector> out;
  if (z.count() >= budget.max_locations) return out;
  const std::size_t top = top_rank(z, budget).value_or(z.size());
  const double cost = investment(z, budget);
  for (std::size_t p = 0; p < top; ++p) {
    const BusIndex b = budget.priority[p];
    const double c = cost + budget.alpha[b];
    if (!fits(c, budget.max_investment)) continue;
    LocationVector child = z.with(b);
    std::vector<BusIndex> cands(budget.priority.begin(), budget.priority.begin() + p);
    if (has_maximal_completion(child, c, cands, budget)) out.push_back(std::move(child));
  }
  return out;
}

namespace {

// Depth-first walk over leaves; `visit` returns false to stop.
void walk_leaves(const LocationVector& z, const Budget& budget,
                 const std::function<bool(const LocationVector&)>& visit, bool& stop) {
  if (stop) return;
  auto kids = children(z, budget);
  if (kids.empty()) {
    if (!visit(z)) stop = true;
    return;
  }
  for (const auto& c : kids) {
    walk_leaves(c, budget, visit, stop);
    if (stop) return;
  }
}

}  // namespace

std::vector<LocationVector> enumerate_leaves(const Budget& budget, std::size_t n_buses,
                                             std::size_t guard) {
  check_size(budget, n_buses);
  std::vector<LocationVector> leaves;
  bool stop = false;
  walk_leaves(LocationVector(n_buses), budget,
              [&](const LocationVector& z) {
                if (leaves.size() >= guard) return false;
                leaves.push_back(z);
                return true;
              },
              stop);
  if (stop) {
    throw Error(ErrorKind::EnumerationTooLarge,
                "more than " + std::to_string(guard) + " leaves", "budget");
  }
  return leaves;
}

std::size_t count_leaves(const Budget& budget, std::size_t n_buses, std::size_t limit) {
  check_size(budget, n_buses);
  std::size_t count = 0;
  bool stop = false;
  walk_leaves(LocationVector(n_buses), budget,
              [&](const LocationVector&) { return ++count <= limit; }, stop);
  return count;
}

bool contains(const LocationVector& ancestor, const LocationVector& descendant) {
  if (ancestor.size() != descendant.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "sizes " + std::to_string(ancestor.size()) + " and " +
                    std::to_string(descendant.size()),
                "z");
  }
  for (std::size_t i = 0; i < ancestor.size(); ++i) {
    if (ancestor.selected(i) && !descendant.selected(i)) return false;
  }
  return true;
}

SearchTree::SearchTree(Budget budget, std::size_t n_buses)
    : budget_(std::move(budget)), n_buses_(n_buses) {
  check_size(budget_, n_buses_);
  add(LocationVector(n_buses_), std::nullopt);
}

NodeId SearchTree::add(LocationVector state, std::optional<NodeId> parent) {
  TreeNode node;
  node.terminal = children(state, budget_).empty();
  node.state = std::move(state);
  node.parent = parent;
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

const std::vector<NodeId>& SearchTree::expand(NodeId id) {
  if (!nodes_.at(id).expanded) {
    auto states = children(nodes_[id].state, budget_);
    std::vector<NodeId> ids;
    ids.reserve(states.size());
    for (auto& s : states) ids.push_back(add(std::move(s), id));
    nodes_[id].children = std::move(ids);
    nodes_[id].expanded = true;
  }
  return nodes_[id].children;
}

std::vector<NodeId> SearchTree::live_children(NodeId id) const {
  std::vector<NodeId> out;
  for (NodeId c : nodes_.at(id).children) {
    if (!nodes_[c].removed) out.push_back(c);
  }
  return out;
}

std::string SearchTree::snapshot_json() const {
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& nd = nodes_[i];
    nlohmann::ordered_json j;
    j["id"] = i;
    j["z"] = nd.state.key();
    j["buses"] = nd.state.buses();
    j["parent"] = nd.parent ? nlohmann::ordered_json(*nd.parent) : nlohmann::ordered_json(nullptr);
    j["N"] = nd.visits;
    j["V"] = nd.value;
    j["removed"] = nd.removed;
    j["terminal"] = nd.terminal;
    j["expanded"] = nd.expanded;
    j["children"] = nd.children;
    nodes.push_back(std::move(j));
  }
  nlohmann::ordered_json doc;
  doc["n_buses"] = n_buses_;
  doc["nodes"] = std::move(nodes);
  return doc.dump(1);
}

}  // namespace shiftplan
