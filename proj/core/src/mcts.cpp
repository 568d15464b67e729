#include "shiftplan/mcts.hpp"

#include "shiftplan/error.hpp"

#include <algorithm>
#include <chrono>

namespace shiftplan {

std::string_view to_string(RewardNormalization mode) noexcept {
  switch (mode) {
    case RewardNormalization::RunningMinMax: return "running-min-max";
    case RewardNormalization::FixedRange: return "fixed-range";
  }
  return "unknown";
}

std::string_view to_string(StopReason reason) noexcept {
  switch (reason) {
    case StopReason::Converged: return "converged";
    case StopReason::Exhausted: return "exhausted";
    case StopReason::MaxRounds: return "max_rounds";
    case StopReason::WallClock: return "wall_clock";
  }
  return "unknown";
}

void validate_search_config(const SearchConfig& cfg) {
  if (!(cfg.rho >= 0.0) || !std::isfinite(cfg.rho))
    throw Error(ErrorKind::InvalidParams, "rho must be finite and >= 0", "search.rho");
  if (cfg.max_rounds < 1)
    throw Error(ErrorKind::InvalidParams, "max_rounds must be >= 1", "search.max_rounds");
  if (cfg.convergence_window < 1)
    throw Error(ErrorKind::InvalidParams, "convergence_window must be >= 1",
                "search.convergence_window");
  if (!(cfg.wall_clock_budget > 0.0))
    throw Error(ErrorKind::InvalidParams, "wall_clock_budget must be > 0",
                "search.wall_clock_budget");
  if (cfg.normalization == RewardNormalization::FixedRange &&
      !(cfg.reward_max > cfg.reward_min && std::isfinite(cfg.reward_max - cfg.reward_min)))
    throw Error(ErrorKind::InvalidParams, "fixed reward range must satisfy min < max",
                "search.reward_range");
}

double ucb(double v_hat, std::uint64_t n_parent, std::uint64_t n_child, double rho) {
  return v_hat + rho * std::sqrt(std::log(static_cast<double>(n_parent)) /
                                 static_cast<double>(n_child));
}

void backpropagate(SearchTree& tree, const std::vector<NodeId>& path, double reward) {
  for (NodeId id : path) {
    auto& nd = tree.node(id);
    nd.visits += 1;
    nd.value += reward;
  }
}

std::vector<NodeId> prune(SearchTree& tree, NodeId id) {
  std::vector<NodeId> removed;
  std::optional<NodeId> cur = id;
  while (cur) {
    auto& nd = tree.node(*cur);
    if (nd.removed) break;
    if (*cur != id && !tree.live_children(*cur).empty()) break;
    nd.removed = true;
    removed.push_back(*cur);
    cur = nd.parent;
  }
  return removed;
}

std::vector<NodeId> greedy_path(const SearchTree& tree) {
  std::vector<NodeId> path{tree.root()};
  if (tree.node(tree.root()).removed) return path;
  while (true) {
    const auto kids = tree.live_children(path.back());
    if (kids.empty()) break;
    NodeId best = kids.front();
    for (NodeId c : kids)
      if (tree.node(c).visits > tree.node(best).visits) best = c;
    path.push_back(best);
  }
  return path;
}

namespace {

class Engine {
 public:
  Engine(const Budget& budget, std::size_t n, const LeafEvaluator& evaluate, const SearchConfig& cfg)
      : tree_(budget, n), evaluate_(evaluate), cfg_(cfg), rng_(cfg.seed),
        single_leaf_(count_leaves(budget, n, 1) == 1) {
    index_[tree_.node(tree_.root()).state.key()] = tree_.root();
  }

  SearchOutcome run();

 private:
  using Clock = std::chrono::steady_clock;

  std::size_t pick_uniform(std::size_t count) {
    return std::uniform_int_distribution<std::size_t>(0, count - 1)(rng_);
  }

  double normalized(const TreeNode& nd) const {
    const double mean = nd.value / static_cast<double>(nd.visits);
    double lo = cfg_.reward_min, hi = cfg_.reward_max;
    if (cfg_.normalization == RewardNormalization::RunningMinMax) {
      if (!seen_reward_) return 0.5;
      lo = rmin_;
      hi = rmax_;
    }
    if (!(hi > lo)) return 0.5;
    return (mean - lo) / (hi - lo);
  }

  NodeId select_child(NodeId parent);
  const std::vector<NodeId>& expand(NodeId id);
  void kill(const LocationVector& z);
  bool closed(NodeId id) const;
  std::optional<std::pair<LocationVector, double>> simulate(NodeId start, std::size_t& infeasible,
                                                            bool& cached);

  SearchTree tree_;
  const LeafEvaluator& evaluate_;
  const SearchConfig& cfg_;
  std::mt19937_64 rng_;

  std::unordered_map<std::string, NodeId> index_;  // materialized states
  std::unordered_set<std::string> dead_;           // states with no feasible leaf below
  std::unordered_map<std::string, double> cache_;  // feasible leaf objectives
  std::size_t pruned_leaves_ = 0;
  bool single_leaf_;

  bool seen_reward_ = false;
  double rmin_ = 0.0, rmax_ = 0.0;
};

NodeId Engine::select_child(NodeId parent) {
  const auto kids = tree_.live_children(parent);
  std::vector<NodeId> fresh;
  for (NodeId c : kids)
    if (tree_.node(c).visits == 0) fresh.push_back(c);
  if (!fresh.empty()) return fresh[pick_uniform(fresh.size())];

  const auto n_parent = tree_.node(parent).visits;
  NodeId best = kids.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (NodeId c : kids) {
    const auto& nd = tree_.node(c);
    const double s = ucb(normalized(nd), n_parent, nd.visits, cfg_.rho);
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  return best;
}

const std::vector<NodeId>& Engine::expand(NodeId id) {
  const bool fresh = !tree_.node(id).expanded;
  const auto& kids = tree_.expand(id);
  if (fresh) {
    for (NodeId c : kids) {
      const std::string key = tree_.node(c).state.key();
      index_[key] = c;
      if (dead_.count(key)) tree_.node(c).removed = true;
    }
    if (!kids.empty() && tree_.live_children(id).empty()) kill(tree_.node(id).state);
  }
  return kids;
}

void Engine::kill(const LocationVector& z) {
  const std::string key = z.key();
  dead_.insert(key);
  auto it = index_.find(key);
  if (it == index_.end()) return;
  for (NodeId r : prune(tree_, it->second)) dead_.insert(tree_.node(r).state.key());
}

// Every leaf below `id` is evaluated or known infeasible.
bool Engine::closed(NodeId id) const {
  const auto& nd = tree_.node(id);
  if (nd.removed) return true;
  if (nd.terminal) return cache_.count(nd.state.key()) > 0;
  if (!nd.expanded) return false;
  for (NodeId c : nd.children)
    if (!closed(c)) return false;
  return true;
}

// Random rollout from a live tree node. Returns nullopt when `start` turned
// out to have no feasible leaf (it is then removed).
std::optional<std::pair<LocationVector, double>> Engine::simulate(NodeId start,
                                                                  std::size_t& infeasible,
                                                                  bool& cached) {
  const Budget& budget = tree_.budget();
  while (!tree_.node(start).removed) {
    LocationVector z = tree_.node(start).state;
    bool restart = false;
    while (true) {
      auto kids = children(z, budget);
      if (kids.empty()) break;
      std::erase_if(kids, [&](const LocationVector& c) { return dead_.count(c.key()) > 0; });
      if (kids.empty()) {
        kill(z);
        restart = true;
        break;
      }
      z = kids[pick_uniform(kids.size())];
    }
    if (restart) continue;

    const std::string key = z.key();
    if (auto it = cache_.find(key); it != cache_.end()) {
      cached = true;
      return std::make_pair(z, it->second);
    }
    const auto obj = evaluate_(z);
    if (obj) {
      cache_[key] = *obj;
      cached = false;
      return std::make_pair(z, *obj);
    }
    ++infeasible;
    ++pruned_leaves_;
    kill(z);
  }
  return std::nullopt;
}

SearchOutcome Engine::run() {
  SearchOutcome out;
  const auto t0 = Clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  std::vector<NodeId> last_path;
  std::size_t stable = 0;
  const NodeId root = tree_.root();

  for (std::size_t round = 1; round <= cfg_.max_rounds; ++round) {
    if (!out.trace.empty() && elapsed() >= cfg_.wall_clock_budget) {
      out.stop_reason = StopReason::WallClock;
      break;
    }
    std::size_t infeasible = 0;
    bool cached = false;
    std::optional<std::pair<LocationVector, double>> sample;
    std::vector<NodeId> path;
    while (!sample) {
      if (tree_.node(root).removed)
        throw Error(ErrorKind::NoFeasiblePlan, "every candidate location vector is infeasible",
                    "search");
      path.assign(1, root);
      NodeId node = root;
      bool lost = false;
      while (!tree_.node(node).terminal && tree_.node(node).visits >= 1) {
        expand(node);
        if (tree_.node(node).removed) {
          lost = true;
          break;
        }
        node = select_child(node);
        path.push_back(node);
      }
      if (lost) continue;
      sample = simulate(node, infeasible, cached);
    }

    const double objective = sample->second;
    const double reward = -objective;
    backpropagate(tree_, path, reward);
    if (!seen_reward_) {
      rmin_ = rmax_ = reward;
      seen_reward_ = true;
    } else {
      rmin_ = std::min(rmin_, reward);
      rmax_ = std::max(rmax_, reward);
    }
    if (objective < out.best_objective) {
      out.best_objective = objective;
      out.z_star = sample->first;
    }

    TraceRecord rec;
    rec.round = round;
    rec.z = sample->first;
    rec.objective = objective;
    rec.best_so_far = out.best_objective;
    rec.infeasible_leaves = infeasible;
    rec.cached = cached;
    out.trace.push_back(std::move(rec));
    out.round_seconds.push_back(elapsed());
    out.rounds_used = round;

    if (single_leaf_ || closed(root)) {
      out.stop_reason = StopReason::Exhausted;
      out.converged = true;
      out.converged_round = round;
      break;
    }
    auto gp = greedy_path(tree_);
    stable = (gp == last_path) ? stable + 1 : 0;
    last_path = std::move(gp);
    if (tree_.node(last_path.back()).terminal && stable >= cfg_.convergence_window) {
      out.stop_reason = StopReason::Converged;
      out.converged = true;
      out.converged_round = round;
      break;
    }
  }
  out.evaluations = cache_.size();
  out.pruned_leaves = pruned_leaves_;
  out.tree = std::move(tree_);
  return out;
}

}  // namespace

SearchOutcome search(const Budget& budget, std::size_t n_buses, const LeafEvaluator& evaluate,
                     const SearchConfig& cfg) {
  validate_search_config(cfg);
  Engine engine(budget, n_buses, evaluate, cfg);
  return engine.run();
}

SearchOutcome search(const DispatchModel& model, const Budget& budget, const CostCaps& caps,
                     const SearchConfig& cfg, const WorkerPool& pool) {
  const LeafEvaluator eval = [&](const LocationVector& z) -> std::optional<double> {
    const auto ev = evaluate_plan(model, z, caps, pool);
    if (!ev.feasible) return std::nullopt;
    return ev.total_emission;
  };
  return search(budget, model.network().n_buses(), eval, cfg);
}

}  // namespace shiftplan
