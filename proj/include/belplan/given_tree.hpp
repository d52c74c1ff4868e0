#pragma once

// Sparse given belief trees and the three solvers over them:
//   - exact backward induction (the baseline),
//   - bottom-up bounded solve with pruning and uniform resimplification,
//   - lazy root-gap-driven solve that promotes single rewards along laces.
//
// The tree itself (beliefs, sampled observations, index chains) is a pure
// function of (seed, models, parameters); solvers never consume randomness, so
// paired runs of different solvers see bit-identical trees.

#include <limits>
#include <memory>
#include <vector>

#include "belplan/belief.hpp"
#include "belplan/common.hpp"
#include "belplan/entropy.hpp"
#include "belplan/ledger.hpp"
#include "belplan/models.hpp"
#include "belplan/reward.hpp"
#include "belplan/rng.hpp"

namespace belplan {

struct GivenTreeNode {
  int id = 0;
  int depth = 0;
  int parent = -1;
  int action_index = -1;  // action on the edge from the parent
  WeightedParticleBelief belief;
  IndexChain chain;
  EntropyBoundsProblem problem;            // incoming-edge reward inputs (non-root)
  std::vector<std::vector<int>> children;  // [action index][observation slot] -> id

  bool is_leaf() const { return children.empty(); }
};

struct GivenTreeParams {
  std::vector<std::vector<double>> actions;  // |A| actions of the state dimension
  std::vector<int> obs_per_depth;            // observations per (node, action), index = depth
  int depth_limit = 0;                       // L
  int n_max = 10;                            // simplification levels
  int max_obs_retries = 64;                  // redraws on zero-likelihood observations
};

struct GivenTree {
  const TransitionModel* transition = nullptr;
  const ObservationModel* obs = nullptr;
  GivenTreeParams params;
  SimplificationSchedule schedule;
  double density_sup = 0.0;
  std::vector<std::unique_ptr<GivenTreeNode>> nodes;  // creation (preorder) order

  GivenTreeNode& root() { return *nodes[0]; }
  const GivenTreeNode& root() const { return *nodes[0]; }
  int non_root_count() const { return static_cast<int>(nodes.size()) - 1; }
};

namespace detail {

inline void expand_given_tree(GivenTree& tree, GivenTreeNode& node, std::uint64_t seed,
                              RunLedger* ledger) {
  if (node.depth >= tree.params.depth_limit) return;
  const auto& actions = tree.params.actions;
  const int n_z = tree.params.obs_per_depth[node.depth];
  node.children.assign(actions.size(), {});
  for (std::size_t a = 0; a < actions.size(); ++a) {
    for (int k = 0; k < n_z; ++k) {
      const std::uint64_t slot = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(k);
      Rng obs_rng = make_stream(seed, Purpose::kObsSample, static_cast<std::uint64_t>(node.id), slot);
      Rng prop_rng = make_stream(seed, Purpose::kPropagate, static_cast<std::uint64_t>(node.id), slot);
      std::vector<double> z;
      WeightedParticleBelief post;
      bool ok = false;
      for (int attempt = 0; attempt < tree.params.max_obs_retries; ++attempt) {
        z = sample_observation(node.belief, actions[a].data(), *tree.transition, *tree.obs,
                               obs_rng)
                .second;
        try {
          post = pf_update(node.belief, actions[a].data(), z.data(), *tree.transition,
                           *tree.obs, prop_rng);
          ok = true;
          break;
        } catch (const ZeroLikelihoodObservation&) {
          if (ledger != nullptr) ++ledger->zero_likelihood_events;
        }
      }
      if (!ok) throw ZeroLikelihoodObservation();

      auto child = std::make_unique<GivenTreeNode>();
      child->id = static_cast<int>(tree.nodes.size());
      child->depth = node.depth + 1;
      child->parent = node.id;
      child->action_index = static_cast<int>(a);
      child->belief = std::move(post);
      Rng chain_rng =
          make_stream(seed, Purpose::kIndexChain, static_cast<std::uint64_t>(child->id));
      child->chain = make_index_chain(child->belief.size(), tree.schedule, chain_rng);
      child->problem.action = actions[a];
      child->problem.observation = std::move(z);
      child->problem.transition = tree.transition;
      child->problem.obs = tree.obs;
      child->problem.m = tree.density_sup;
      node.children[a].push_back(child->id);
      tree.nodes.push_back(std::move(child));
      GivenTreeNode& placed = *tree.nodes.back();
      expand_given_tree(tree, placed, seed, ledger);
    }
  }
}

}  // namespace detail

// Builds the sparse tree depth-first; node ids follow creation order.  The
// borrowed belief/chain pointers inside each child's bound problem are wired
// after construction so vector growth cannot invalidate them.
inline GivenTree build_given_tree(const WeightedParticleBelief& root_belief,
                                  const TransitionModel& transition, const ObservationModel& obs,
                                  const GivenTreeParams& params, std::uint64_t seed,
                                  RunLedger* ledger = nullptr) {
  GivenTree tree;
  tree.transition = &transition;
  tree.obs = &obs;
  tree.params = params;
  tree.schedule = default_schedule(root_belief.size(), params.n_max);
  tree.density_sup = transition_density_max(transition);

  auto root = std::make_unique<GivenTreeNode>();
  root->id = 0;
  root->depth = 0;
  root->belief = root_belief;
  Rng chain_rng = make_stream(seed, Purpose::kIndexChain, 0);
  root->chain = make_index_chain(root_belief.size(), tree.schedule, chain_rng);
  tree.nodes.push_back(std::move(root));
  detail::expand_given_tree(tree, tree.root(), seed, ledger);

  for (auto& node : tree.nodes) {
    if (node->parent < 0) continue;
    const GivenTreeNode& parent = *tree.nodes[node->parent];
    node->problem.prev = &parent.belief;
    node->problem.post = &node->belief;
    node->problem.chain_prev = &parent.chain;
    node->problem.chain_post = &node->chain;
  }
  return tree;
}

struct GivenTreeSolution {
  int best_action = 0;
  std::vector<double> q_lower;  // root action values; equal pairs for the baseline
  std::vector<double> q_upper;
  double value_lower = 0.0;
  double value_upper = 0.0;
};

namespace detail {

inline void record_final_levels(const GivenTree& tree, const std::vector<int>& levels,
                                RunLedger* ledger) {
  if (ledger == nullptr) return;
  for (const auto& node : tree.nodes) {
    if (node->parent < 0) continue;
    const int n_x = node->belief.size();
    const int level = levels[node->id];
    ledger->final_levels.push_back(
        {node->depth, n_x, tree.schedule.level_sizes[level - 1]});
  }
}

}  // namespace detail

// Exact backward induction: every reward at the full particle set,
// Q(b,a) = (1/n_z) sum_k [rho(b,a,b'_k) + gamma V(b'_k)].
inline GivenTreeSolution solve_exact(const GivenTree& tree, const RewardSpec& spec,
                                     RunLedger* ledger = nullptr) {
  struct Solver {
    const GivenTree& tree;
    const RewardSpec& spec;
    RunLedger* ledger;

    double value(const GivenTreeNode& node, GivenTreeSolution* out) const {
      if (node.is_leaf()) return 0.0;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < node.children.size(); ++a) {
        KahanSum q;
        for (int cid : node.children[a]) {
          const GivenTreeNode& child = *tree.nodes[cid];
          const double rho = composite_reward(node.belief, child.problem.action.data(),
                                              child.problem.observation.data(), child.belief,
                                              *tree.transition, *tree.obs, spec, ledger);
          q.add(rho + spec.gamma * value(child, nullptr));
        }
        const double qa = q.value() / static_cast<double>(node.children[a].size());
        if (out != nullptr) {
          out->q_lower.push_back(qa);
          out->q_upper.push_back(qa);
        }
        if (qa > best) best = qa;
      }
      return best;
    }
  };

  GivenTreeSolution sol;
  Solver solver{tree, spec, ledger};
  const double v = solver.value(tree.root(), &sol);
  sol.value_lower = sol.value_upper = v;
  sol.best_action = 0;
  for (std::size_t a = 1; a < sol.q_lower.size(); ++a) {
    if (sol.q_lower[a] > sol.q_lower[sol.best_action]) sol.best_action = static_cast<int>(a);
  }
  if (ledger != nullptr) {
    std::vector<int> levels(tree.nodes.size(), tree.schedule.n_max);
    detail::record_final_levels(tree, levels, ledger);
  }
  return sol;
}

namespace detail {

// Shared solver state for the bounded planners: one reward interval per
// non-root node plus per-node value intervals and convergence levels.
struct BoundedState {
  const GivenTree* tree = nullptr;
  const RewardSpec* spec = nullptr;
  RunLedger* ledger = nullptr;
  std::vector<RewardInterval> rewards;   // by node id; incoming-edge reward
  std::vector<double> value_lower;       // by node id
  std::vector<double> value_upper;
  std::vector<int> value_level;          // n_max once the subtree is converged
  std::vector<std::vector<char>> alive;  // by node id, per action (pruning mask)

  int n_max() const { return tree->schedule.n_max; }

  void init(const GivenTree& t, const RewardSpec& s, RunLedger* l, int init_level = 1) {
    tree = &t;
    spec = &s;
    ledger = l;
    const std::size_t n = t.nodes.size();
    rewards.resize(n);
    value_lower.assign(n, 0.0);
    value_upper.assign(n, 0.0);
    value_level.assign(n, n_max());
    alive.resize(n);
    for (const auto& node : t.nodes) {
      alive[node->id].assign(node->children.size(), 1);
      if (node->parent >= 0) {
        rewards[node->id] = composite_reward_bounds(node->problem, s, init_level, l);
      }
    }
  }

  bool promote(int node_id) {
    const bool promoted =
        promote_reward(tree->nodes[node_id]->problem, rewards[node_id], *spec, ledger);
    if (promoted && ledger != nullptr) ++ledger->resimplification_calls;
    return promoted;
  }

  // Q interval of one action, always recomputed from per-child terms in fixed
  // child order, so post-promotion values match a from-scratch evaluation.
  void q_interval(const GivenTreeNode& node, int a, double& lo, double& hi) const {
    KahanSum l, u;
    for (int cid : node.children[a]) {
      l.add(rewards[cid].lower + spec->gamma * value_lower[cid]);
      u.add(rewards[cid].upper + spec->gamma * value_upper[cid]);
    }
    const double inv = 1.0 / static_cast<double>(node.children[a].size());
    lo = l.value() * inv;
    hi = u.value() * inv;
  }

  int action_level(const GivenTreeNode& node, int a) const {
    int level = n_max();
    for (int cid : node.children[a]) {
      level = std::min(level, std::min(rewards[cid].level, value_level[cid]));
    }
    return level;
  }

  // Recomputes value bounds and the convergence level of a solved node from
  // its alive actions.
  void refresh_value(const GivenTreeNode& node) {
    if (node.is_leaf()) return;
    double vl = -std::numeric_limits<double>::infinity();
    double vu = -std::numeric_limits<double>::infinity();
    int level = n_max();
    for (std::size_t a = 0; a < node.children.size(); ++a) {
      if (!alive[node.id][a]) continue;
      double lo, hi;
      q_interval(node, static_cast<int>(a), lo, hi);
      vl = std::max(vl, lo);
      vu = std::max(vu, hi);
      level = std::min(level, action_level(node, static_cast<int>(a)));
    }
    value_lower[node.id] = vl;
    value_upper[node.id] = vu;
    value_level[node.id] = level;
  }
};

}  // namespace detail

// Bottom-up bounded solve: at each node, prune actions whose upper bound falls
// strictly below another action's lower bound; otherwise promote every reward
// at the minimal simplification level across the surviving subtrees, and
// repeat until a single action survives or everything is converged.
inline GivenTreeSolution solve_bounded_pruning(const GivenTree& tree, const RewardSpec& spec,
                                               RunLedger* ledger = nullptr,
                                               int init_level = 1) {
  struct Solver {
    detail::BoundedState st;

    // Promotes the minimal-level rewards in the subtree hanging off (node, a)
    // and refreshes every touched descendant's value interval.
    void resimplify_action(const GivenTreeNode& node, int a, int s_min) {
      for (int cid : node.children[a]) {
        const GivenTreeNode& child = *st.tree->nodes[cid];
        if (st.rewards[cid].level <= s_min) st.promote(cid);
        if (!child.is_leaf() && st.value_level[cid] <= s_min) {
          for (std::size_t aa = 0; aa < child.children.size(); ++aa) {
            if (!st.alive[cid][aa]) continue;
            resimplify_action(child, static_cast<int>(aa), s_min);
          }
          st.refresh_value(child);
        }
      }
    }

    void solve(const GivenTreeNode& node) {
      if (node.is_leaf()) return;
      for (const auto& group : node.children) {
        for (int cid : group) solve(*st.tree->nodes[cid]);
      }
      auto& mask = st.alive[node.id];
      while (true) {
        // Prune against the best alive lower bound.
        double best_lower = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < node.children.size(); ++a) {
          if (!mask[a]) continue;
          double lo, hi;
          st.q_interval(node, static_cast<int>(a), lo, hi);
          best_lower = std::max(best_lower, lo);
        }
        int survivors = 0;
        int min_level = st.n_max();
        for (std::size_t a = 0; a < node.children.size(); ++a) {
          if (!mask[a]) continue;
          double lo, hi;
          st.q_interval(node, static_cast<int>(a), lo, hi);
          if (hi < best_lower) {
            mask[a] = 0;
            continue;
          }
          ++survivors;
          min_level = std::min(min_level, st.action_level(node, static_cast<int>(a)));
        }
        if (survivors <= 1 || min_level >= st.n_max()) break;
        for (std::size_t a = 0; a < node.children.size(); ++a) {
          if (!mask[a]) continue;
          resimplify_action(node, static_cast<int>(a), min_level);
        }
      }
      st.refresh_value(node);
    }
  };

  Solver solver;
  solver.st.init(tree, spec, ledger, init_level);
  solver.solve(tree.root());

  GivenTreeSolution sol;
  const GivenTreeNode& root = tree.root();
  sol.best_action = -1;
  double best_lower = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < root.children.size(); ++a) {
    double lo, hi;
    solver.st.q_interval(root, static_cast<int>(a), lo, hi);
    sol.q_lower.push_back(lo);
    sol.q_upper.push_back(hi);
    if (solver.st.alive[0][a] && lo > best_lower) {
      best_lower = lo;
      sol.best_action = static_cast<int>(a);
    }
  }
  sol.value_lower = solver.st.value_lower[0];
  sol.value_upper = solver.st.value_upper[0];
  if (ledger != nullptr) {
    std::vector<int> levels(tree.nodes.size(), tree.schedule.n_max);
    for (const auto& node : tree.nodes) {
      if (node->parent >= 0) levels[node->id] = solver.st.rewards[node->id].level;
    }
    detail::record_final_levels(tree, levels, ledger);
  }
  return sol;
}

// Lazy solve: all rewards start at the coarsest level; while a competitor's
// upper bound exceeds the candidate's lower bound at the root, descend the
// conflicting actions promoting one reward per level along a single lace
// (max-gap action, max-value-gap child; reward gap at the deepest edge).
inline GivenTreeSolution solve_bounded_lazy(const GivenTree& tree, const RewardSpec& spec,
                                            RunLedger* ledger = nullptr) {
  struct Solver {
    detail::BoundedState st;

    // Children precede parents nowhere (preorder ids grow downward), so one
    // reverse-id sweep refreshes every value interval bottom-up.
    void refresh_all() {
      for (auto it = st.tree->nodes.rbegin(); it != st.tree->nodes.rend(); ++it) {
        st.refresh_value(**it);
      }
    }

    bool descend(const GivenTreeNode& node, int a) {
      // Pick the child: value gap above the deepest edge, reward gap on it.
      int pick = -1;
      double best_gap = -1.0;
      for (int cid : node.children[a]) {
        const GivenTreeNode& child = *st.tree->nodes[cid];
        const double gap = child.is_leaf()
                               ? st.rewards[cid].gap()
                               : st.value_upper[cid] - st.value_lower[cid];
        if (gap > best_gap) {
          best_gap = gap;
          pick = cid;
        }
      }
      bool promoted = st.promote(pick);
      const GivenTreeNode& child = *st.tree->nodes[pick];
      if (!child.is_leaf()) {
        int next_a = 0;
        double best = -1.0;
        for (std::size_t aa = 0; aa < child.children.size(); ++aa) {
          double lo, hi;
          st.q_interval(child, static_cast<int>(aa), lo, hi);
          if (hi - lo > best) {
            best = hi - lo;
            next_a = static_cast<int>(aa);
          }
        }
        promoted = descend(child, next_a) || promoted;
      }
      return promoted;
    }

    // Promotes the first unconverged reward under (root, a); guards the loop
    // against a descent that finds every lace reward already at the top level.
    bool force_promote(const GivenTreeNode& node, int a) {
      for (int cid : node.children[a]) {
        if (st.rewards[cid].level < st.n_max() && st.promote(cid)) return true;
        const GivenTreeNode& child = *st.tree->nodes[cid];
        for (std::size_t aa = 0; aa < child.children.size(); ++aa) {
          if (force_promote(child, static_cast<int>(aa))) return true;
        }
      }
      return false;
    }
  };

  Solver solver;
  solver.st.init(tree, spec, ledger);
  solver.refresh_all();

  const GivenTreeNode& root = tree.root();
  const std::size_t n_a = root.children.size();
  int candidate = 0;
  while (true) {
    std::vector<double> ql(n_a), qu(n_a);
    candidate = 0;
    for (std::size_t a = 0; a < n_a; ++a) {
      solver.st.q_interval(root, static_cast<int>(a), ql[a], qu[a]);
      if (ql[a] > ql[candidate]) candidate = static_cast<int>(a);
    }
    double delta = 0.0;
    for (std::size_t a = 0; a < n_a; ++a) {
      if (static_cast<int>(a) == candidate) continue;
      delta = std::max(delta, qu[a] - ql[candidate]);
    }
    if (!(delta > 0.0)) break;

    bool promoted = solver.descend(root, candidate);
    for (std::size_t a = 0; a < n_a; ++a) {
      if (static_cast<int>(a) == candidate) continue;
      if (qu[a] > ql[candidate]) promoted = solver.descend(root, static_cast<int>(a)) || promoted;
    }
    if (!promoted) {
      for (std::size_t a = 0; a < n_a && !promoted; ++a) {
        if (static_cast<int>(a) == candidate || qu[a] > ql[candidate]) {
          promoted = solver.force_promote(root, static_cast<int>(a));
        }
      }
      if (!promoted) break;  // everything relevant converged; delta is final
    }
    solver.refresh_all();
  }

  GivenTreeSolution sol;
  sol.best_action = candidate;
  for (std::size_t a = 0; a < n_a; ++a) {
    double lo, hi;
    solver.st.q_interval(root, static_cast<int>(a), lo, hi);
    sol.q_lower.push_back(lo);
    sol.q_upper.push_back(hi);
  }
  sol.value_lower = sol.q_lower[candidate];
  sol.value_upper = sol.q_upper[candidate];
  if (ledger != nullptr) {
    std::vector<int> levels(tree.nodes.size(), tree.schedule.n_max);
    for (const auto& node : tree.nodes) {
      if (node->parent >= 0) levels[node->id] = solver.st.rewards[node->id].level;
    }
    detail::record_final_levels(tree, levels, ledger);
  }
  return sol;
}

// Interval backward induction with every reward pinned at one level and no
// pruning.  Used by diagnostics; at the top level the intervals are degenerate
// and reproduce the exact solve.
inline GivenTreeSolution solve_fixed_level(const GivenTree& tree, const RewardSpec& spec,
                                           int level, RunLedger* ledger = nullptr) {
  detail::BoundedState st;
  st.tree = &tree;
  st.spec = &spec;
  st.ledger = ledger;
  const std::size_t n = tree.nodes.size();
  st.rewards.resize(n);
  st.value_lower.assign(n, 0.0);
  st.value_upper.assign(n, 0.0);
  st.value_level.assign(n, tree.schedule.n_max);
  st.alive.resize(n);
  for (const auto& node : tree.nodes) {
    st.alive[node->id].assign(node->children.size(), 1);
    if (node->parent >= 0) {
      st.rewards[node->id] = composite_reward_bounds(node->problem, spec, level, ledger);
    }
  }
  for (auto it = tree.nodes.rbegin(); it != tree.nodes.rend(); ++it) st.refresh_value(**it);

  GivenTreeSolution sol;
  const GivenTreeNode& root = tree.root();
  sol.best_action = 0;
  for (std::size_t a = 0; a < root.children.size(); ++a) {
    double lo, hi;
    st.q_interval(root, static_cast<int>(a), lo, hi);
    sol.q_lower.push_back(lo);
    sol.q_upper.push_back(hi);
    if (lo > sol.q_lower[sol.best_action]) sol.best_action = static_cast<int>(a);
  }
  sol.value_lower = st.value_lower[0];
  sol.value_upper = st.value_upper[0];
  if (ledger != nullptr) {
    std::vector<int> levels(tree.nodes.size(), level);
    detail::record_final_levels(tree, levels, ledger);
  }
  return sol;
}

}  // namespace belplan
