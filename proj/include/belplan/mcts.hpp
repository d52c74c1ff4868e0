#pragma once

// Monte Carlo tree search over particle beliefs with double progressive
// widening.  One planner class covers both modes:
//   - exact: every reward interval is computed at the top simplification
//     level, so all intervals are degenerate and the selection rule reduces to
//     plain UCB -- the baseline planner;
//   - bounded: rewards start at the coarsest level and are promoted on demand
//     when upper-confidence intervals of candidate actions overlap.
// Because both modes run the same code against the same keyed random streams
// and bound computations consume no randomness, paired runs grow bit-identical
// trees and pick identical actions.

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
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

struct PftParams {
  int depth = 10;          // planning horizon at the root
  int iterations = 200;    // simulations per planning session
  double ucb_c = 40.0;     // exploration constant
  double k_a = 4.0;        // action progressive widening
  double alpha_a = 0.25;
  double k_o = 2.0;        // observation progressive widening
  double alpha_o = 0.1;
  int n_max = 10;          // simplification levels
  bool bounded = false;    // adaptive-bounds mode; false = exact baseline
};

// One rollout step: the beliefs and chain are owned here so the step's reward
// interval can be promoted long after the rollout ran.
struct PftRolloutStep {
  WeightedParticleBelief post;
  IndexChain chain;
  EntropyBoundsProblem problem;
  RewardInterval reward;
  double discount = 1.0;  // gamma^t inside the rollout return
};

struct PftBeliefNode {
  int id = 0;
  int depth_remaining = 0;
  int parent_action = -1;  // action-node id; -1 at the root
  WeightedParticleBelief belief;
  IndexChain chain;
  EntropyBoundsProblem problem;  // incoming-edge reward inputs (non-root)
  RewardInterval reward;         // incoming-edge reward interval
  int visits = 0;
  std::vector<int> action_children;  // action-node ids in ascending action order
  int next_action = 0;

  // Rollout from this node, stored step by step for later refinement.
  std::vector<PftRolloutStep> rollout_steps;
  double rollout_terminal = 0.0;  // discounted terminal contribution, exact
  double rollout_lower = 0.0;
  double rollout_upper = 0.0;
};

struct PftActionNode {
  int id = 0;
  int parent = 0;  // belief-node id
  int action = 0;
  int visits = 0;
  double q_lower = 0.0;
  double q_upper = 0.0;
  std::vector<int> children;     // belief-node ids (observation children)
  std::vector<int> edge_counts;  // creation + descents, per child
  int zero_laces = 0;            // zero-likelihood visits with no child
  int expansion_attempts = 0;    // keys the expansion sampling streams
  bool terminal = false;
  double terminal_value = 0.0;
};

struct PftResult {
  int action = 0;
  std::vector<int> root_actions;  // action ids in root child order
  std::vector<double> q_lower;
  std::vector<double> q_upper;
  std::vector<int> visit_counts;
  std::uint64_t tree_fingerprint = 0;
  int node_count = 0;
};

class PftPlanner {
 public:
  PftPlanner(const TransitionModel& transition, const ObservationModel& obs,
             const RewardSpec& spec, std::vector<std::vector<double>> actions,
             const PftParams& params, int terminal_action = -1,
             std::function<double(const WeightedParticleBelief&)> terminal_reward = {})
      : transition_(&transition),
        obs_(&obs),
        spec_(spec),
        actions_(std::move(actions)),
        params_(params),
        terminal_action_(terminal_action),
        terminal_reward_(std::move(terminal_reward)),
        density_sup_(transition_density_max(transition)) {}

  PftResult plan(const WeightedParticleBelief& root_belief, std::uint64_t seed,
                 RunLedger* ledger = nullptr) {
    seed_ = seed;
    ledger_ = ledger;
    nodes_.clear();
    anodes_.clear();

    auto root = std::make_unique<PftBeliefNode>();
    root->id = 0;
    root->depth_remaining = params_.depth;
    root->belief = root_belief;
    schedule_ = default_schedule(root_belief.size(), params_.n_max);
    Rng chain_rng = make_stream(seed_, Purpose::kIndexChain, 0);
    root->chain = make_index_chain(root_belief.size(), schedule_, chain_rng);
    nodes_.push_back(std::move(root));

    for (int it = 0; it < params_.iterations; ++it) {
      marker_ = std::numeric_limits<int>::max();
      simulate(0, params_.depth);
    }

    PftResult result;
    const PftBeliefNode& r = *nodes_[0];
    int best = -1;
    // Final decision: the same selection rule with the exploration term off.
    const int chosen = action_selection(0, params_.depth, 0.0, true);
    for (int aid : r.action_children) {
      const PftActionNode& an = *anodes_[aid];
      result.root_actions.push_back(an.action);
      result.q_lower.push_back(an.q_lower);
      result.q_upper.push_back(an.q_upper);
      result.visit_counts.push_back(an.visits);
      if (an.id == chosen) best = an.action;
    }
    result.action = best >= 0 ? best : (r.action_children.empty() ? 0 : 0);
    result.tree_fingerprint = fingerprint();
    result.node_count = static_cast<int>(nodes_.size());
    if (ledger_ != nullptr) record_final_levels();
    return result;
  }

  const std::vector<std::unique_ptr<PftBeliefNode>>& belief_nodes() const { return nodes_; }
  const std::vector<std::unique_ptr<PftActionNode>>& action_nodes() const { return anodes_; }

 private:
  struct Interval {
    double lo = 0.0;
    double hi = 0.0;
  };

  // ---- simulation ----

  Interval simulate(int node_id, int d) {
    if (d <= 0) return {0.0, 0.0};
    PftBeliefNode& node = *nodes_[node_id];

    // Action progressive widening (before this visit's count increments).
    if (node.next_action < static_cast<int>(actions_.size()) &&
        static_cast<double>(node.action_children.size()) <=
            params_.k_a * std::pow(static_cast<double>(node.visits), params_.alpha_a)) {
      auto an = std::make_unique<PftActionNode>();
      an->id = static_cast<int>(anodes_.size());
      an->parent = node.id;
      an->action = node.next_action++;
      if (an->action == terminal_action_) {
        an->terminal = true;
        an->terminal_value = terminal_reward_(node.belief);
        an->q_lower = an->q_upper = an->terminal_value;
      }
      node.action_children.push_back(an->id);
      anodes_.push_back(std::move(an));
    }

    const int aid = action_selection(node_id, d, params_.ucb_c, false);
    PftActionNode& an = *anodes_[aid];

    Interval u;
    if (an.terminal) {
      u = {an.terminal_value, an.terminal_value};
      nodes_[node_id]->visits += 1;
      an.visits += 1;
      update_q(an, u, d);
      return u;
    }

    const bool expand =
        static_cast<double>(an.children.size()) <=
        params_.k_o * std::pow(static_cast<double>(an.visits), params_.alpha_o);
    if (expand) {
      const int child_id = try_expand(an);
      if (child_id < 0) {
        an.zero_laces += 1;
        u = {0.0, 0.0};
      } else {
        PftBeliefNode& child = *nodes_[child_id];
        rollout(child);
        u = {child.reward.lower + spec_.gamma * child.rollout_lower,
             child.reward.upper + spec_.gamma * child.rollout_upper};
      }
    } else {
      Rng pick_rng = make_stream(seed_, Purpose::kDpwChildChoice,
                                 static_cast<std::uint64_t>(an.id),
                                 static_cast<std::uint64_t>(an.visits));
      std::uniform_int_distribution<int> pick(0, static_cast<int>(an.children.size()) - 1);
      const int slot = pick(pick_rng);
      an.edge_counts[slot] += 1;
      const int child_id = an.children[slot];
      PftBeliefNode& child = *nodes_[child_id];
      const Interval sub = simulate(child_id, d - 1);
      u = {child.reward.lower + spec_.gamma * sub.lo,
           child.reward.upper + spec_.gamma * sub.hi};
    }

    nodes_[node_id]->visits += 1;
    an.visits += 1;
    update_q(an, u, d);
    return u;
  }

  void update_q(PftActionNode& an, const Interval& u, int d) {
    if (an.terminal) {
      an.q_lower = an.q_upper = an.terminal_value;
      return;
    }
    if (marker_ < d) {
      reconstruct_q(an);
    } else {
      an.q_lower += (u.lo - an.q_lower) / an.visits;
      an.q_upper += (u.hi - an.q_upper) / an.visits;
    }
  }

  // Creates one observation child; returns -1 on a zero-likelihood draw.
  int try_expand(PftActionNode& an) {
    PftBeliefNode& parent = *nodes_[an.parent];
    const std::uint64_t attempt = static_cast<std::uint64_t>(an.expansion_attempts++);
    const double* a = actions_[an.action].data();
    Rng obs_rng =
        make_stream(seed_, Purpose::kObsSample, static_cast<std::uint64_t>(an.id), attempt);
    Rng prop_rng =
        make_stream(seed_, Purpose::kPropagate, static_cast<std::uint64_t>(an.id), attempt);
    auto z = sample_observation(parent.belief, a, *transition_, *obs_, obs_rng).second;
    WeightedParticleBelief post;
    try {
      post = pf_update(parent.belief, a, z.data(), *transition_, *obs_, prop_rng);
    } catch (const ZeroLikelihoodObservation&) {
      if (ledger_ != nullptr) ++ledger_->zero_likelihood_events;
      return -1;
    }

    auto child = std::make_unique<PftBeliefNode>();
    child->id = static_cast<int>(nodes_.size());
    child->depth_remaining = parent.depth_remaining - 1;
    child->parent_action = an.id;
    child->belief = std::move(post);
    Rng chain_rng =
        make_stream(seed_, Purpose::kIndexChain, static_cast<std::uint64_t>(child->id));
    child->chain = make_index_chain(child->belief.size(), schedule_, chain_rng);
    child->problem.action = actions_[an.action];
    child->problem.observation = std::move(z);
    child->problem.transition = transition_;
    child->problem.obs = obs_;
    child->problem.m = density_sup_;
    an.children.push_back(child->id);
    an.edge_counts.push_back(1);
    nodes_.push_back(std::move(child));

    PftBeliefNode& placed = *nodes_.back();
    placed.problem.prev = &nodes_[an.parent]->belief;
    placed.problem.post = &placed.belief;
    placed.problem.chain_prev = &nodes_[an.parent]->chain;
    placed.problem.chain_post = &placed.chain;
    placed.reward = composite_reward_bounds(placed.problem, spec_, init_level(), ledger_);
    return placed.id;
  }

  int init_level() const { return params_.bounded ? 1 : params_.n_max; }

  // ---- rollout ----

  void rollout(PftBeliefNode& node) {
    const int steps = node.depth_remaining;
    // Owned data first, wiring afterwards; the vector is reserved up front so
    // in-loop pointers into it stay valid.
    node.rollout_steps.reserve(static_cast<std::size_t>(std::max(0, steps)));
    const WeightedParticleBelief* prev_belief = &node.belief;
    std::uniform_int_distribution<int> pick(0, static_cast<int>(actions_.size()) - 1);
    for (int t = 0; t < steps; ++t) {
      Rng act_rng = make_stream(seed_, Purpose::kRolloutAction,
                                static_cast<std::uint64_t>(node.id),
                                static_cast<std::uint64_t>(t));
      const int a = pick(act_rng);
      if (a == terminal_action_) {
        node.rollout_terminal = std::pow(spec_.gamma, t) * terminal_reward_(*prev_belief);
        break;
      }
      Rng step_rng = make_stream(seed_, Purpose::kRolloutStep,
                                 static_cast<std::uint64_t>(node.id),
                                 static_cast<std::uint64_t>(t));
      auto z = sample_observation(*prev_belief, actions_[a].data(), *transition_, *obs_,
                                  step_rng)
                   .second;
      WeightedParticleBelief post;
      try {
        post = pf_update(*prev_belief, actions_[a].data(), z.data(), *transition_, *obs_,
                         step_rng);
      } catch (const ZeroLikelihoodObservation&) {
        if (ledger_ != nullptr) ++ledger_->zero_likelihood_events;
        break;
      }
      PftRolloutStep step;
      step.post = std::move(post);
      Rng chain_rng = make_stream(seed_, Purpose::kIndexChain,
                                  static_cast<std::uint64_t>(node.id),
                                  static_cast<std::uint64_t>(t) + 1);
      step.chain = make_index_chain(step.post.size(), schedule_, chain_rng);
      step.problem.action = actions_[a];
      step.problem.observation = std::move(z);
      step.problem.transition = transition_;
      step.problem.obs = obs_;
      step.problem.m = density_sup_;
      step.discount = std::pow(spec_.gamma, t);
      node.rollout_steps.push_back(std::move(step));
      prev_belief = &node.rollout_steps.back().post;
    }
    // Wire borrowed pointers now that the step vector is final.
    for (std::size_t t = 0; t < node.rollout_steps.size(); ++t) {
      PftRolloutStep& step = node.rollout_steps[t];
      const WeightedParticleBelief* prev = t == 0 ? &node.belief : &node.rollout_steps[t - 1].post;
      const IndexChain* pchain = t == 0 ? &node.chain : &node.rollout_steps[t - 1].chain;
      step.problem.prev = prev;
      step.problem.post = &step.post;
      step.problem.chain_prev = pchain;
      step.problem.chain_post = &step.chain;
      step.reward = composite_reward_bounds(step.problem, spec_, init_level(), ledger_);
    }
    recompute_rollout(node);
  }

  void recompute_rollout(PftBeliefNode& node) {
    KahanSum lo, hi;
    for (const PftRolloutStep& step : node.rollout_steps) {
      lo.add(step.discount * step.reward.lower);
      hi.add(step.discount * step.reward.upper);
    }
    node.rollout_lower = lo.value() + node.rollout_terminal;
    node.rollout_upper = hi.value() + node.rollout_terminal;
  }

  // ---- bounds-driven action selection ----

  int action_selection(int node_id, int d, double c, bool final_mode) {
    PftBeliefNode& node = *nodes_[node_id];
    if (node.action_children.empty()) return -1;
    int guard = 0;
    const int guard_limit = 200000;  // defensive only; progress is forced below
    while (true) {
      const double log_n = std::log(std::max(1, node.visits));
      std::vector<double> ucb_lo(node.action_children.size());
      std::vector<double> ucb_hi(node.action_children.size());
      int best = -1;
      for (std::size_t i = 0; i < node.action_children.size(); ++i) {
        const PftActionNode& an = *anodes_[node.action_children[i]];
        if (an.visits == 0) {
          const double inf = final_mode ? -std::numeric_limits<double>::infinity()
                                        : std::numeric_limits<double>::infinity();
          ucb_lo[i] = ucb_hi[i] = inf;
        } else {
          const double bonus = c * std::sqrt(log_n / an.visits);
          ucb_lo[i] = an.q_lower + bonus;
          ucb_hi[i] = an.q_upper + bonus;
        }
        if (best < 0 || ucb_lo[i] > ucb_lo[best]) best = static_cast<int>(i);
      }
      // Overlap set: competitors whose upper confidence exceeds the
      // candidate's lower confidence.  Empty in exact mode by construction.
      int target = best;
      double target_gap = ucb_hi[best] - ucb_lo[best];
      bool overlap = false;
      for (std::size_t i = 0; i < node.action_children.size(); ++i) {
        if (static_cast<int>(i) == best) continue;
        if (ucb_hi[i] > ucb_lo[best]) {
          overlap = true;
          const double gap = ucb_hi[i] - ucb_lo[i];
          if (gap > target_gap) {
            target_gap = gap;
            target = static_cast<int>(i);
          }
        }
      }
      if (!overlap || !std::isfinite(target_gap)) return node.action_children[best];

      PftActionNode& tan = *anodes_[node.action_children[target]];
      promotions_ = 0;
      if (target_gap > 0.0) {
        for (int cid : tan.children) resimplify(cid, target_gap, d);
        reconstruct_q(tan);
      }
      if (promotions_ == 0 && !force_promote(tan)) return node.action_children[best];
      reconstruct_q(tan);
      marker_ = std::min(marker_, d);
      if (++guard > guard_limit) return node.action_children[best];
    }
  }

  // Resimplification over a belief subtree: refine where the discounted
  // reward gap is large enough to matter for the triggering decision.
  void resimplify(int node_id, double g, int d_trigger) {
    PftBeliefNode& node = *nodes_[node_id];
    // Inner descent: the visited action with the largest visit-weighted gap.
    int pick = -1;
    double best_score = 0.0;
    for (int aid : node.action_children) {
      const PftActionNode& an = *anodes_[aid];
      if (an.visits == 0 || an.children.empty()) continue;
      const double score = an.visits * (an.q_upper - an.q_lower);
      if (pick < 0 || score > best_score) {
        best_score = score;
        pick = aid;
      }
    }
    if (pick >= 0) {
      PftActionNode& an = *anodes_[pick];
      for (int cid : an.children) resimplify(cid, g, d_trigger);
      reconstruct_q(an);
    }
    refine_bounds(node, g, d_trigger);
    resimplify_rollout(node, g, d_trigger);
  }

  void refine_bounds(PftBeliefNode& node, double g, int d_trigger) {
    const int exponent = d_trigger - 1 - node.depth_remaining;
    const double score = std::pow(spec_.gamma, exponent) * node.reward.gap();
    if (score >= g / d_trigger) {
      if (promote_reward(node.problem, node.reward, spec_, ledger_)) {
        ++promotions_;
        if (ledger_ != nullptr) ++ledger_->resimplification_calls;
      }
    }
  }

  void resimplify_rollout(PftBeliefNode& node, double g, int d_trigger) {
    int pick = -1;
    double best_score = 0.0;
    for (std::size_t t = 0; t < node.rollout_steps.size(); ++t) {
      const int exponent = d_trigger - node.depth_remaining + static_cast<int>(t);
      const double score =
          std::pow(spec_.gamma, exponent) * node.rollout_steps[t].reward.gap();
      if (score > best_score) {
        best_score = score;
        pick = static_cast<int>(t);
      }
    }
    if (pick >= 0 && best_score >= g / d_trigger) {
      PftRolloutStep& step = node.rollout_steps[pick];
      if (promote_reward(step.problem, step.reward, spec_, ledger_)) {
        ++promotions_;
        if (ledger_ != nullptr) ++ledger_->resimplification_calls;
        recompute_rollout(node);
      }
    }
  }

  // Fallback promotion guaranteeing progress: the first unconverged reward
  // (edge or rollout) anywhere under the action node.
  bool force_promote(PftActionNode& an) {
    for (int cid : an.children) {
      PftBeliefNode& node = *nodes_[cid];
      if (node.reward.level < params_.n_max &&
          promote_reward(node.problem, node.reward, spec_, ledger_)) {
        ++promotions_;
        if (ledger_ != nullptr) ++ledger_->resimplification_calls;
        return true;
      }
      for (PftRolloutStep& step : node.rollout_steps) {
        if (step.reward.level < params_.n_max &&
            promote_reward(step.problem, step.reward, spec_, ledger_)) {
          ++promotions_;
          if (ledger_ != nullptr) ++ledger_->resimplification_calls;
          recompute_rollout(node);
          return true;
        }
      }
      for (int aid : node.action_children) {
        if (force_promote(*anodes_[aid])) {
          reconstruct_q(*anodes_[aid]);
          return true;
        }
      }
    }
    return false;
  }

  // Rebuilds an action node's Q interval from its edges: each edge carries its
  // descent count for the immediate reward and the child's accumulated return
  // totals (one rollout plus visit-weighted action values).
  void reconstruct_q(PftActionNode& an) {
    if (an.terminal) {
      an.q_lower = an.q_upper = an.terminal_value;
      return;
    }
    if (an.visits == 0) return;
    KahanSum lo, hi;
    for (std::size_t e = 0; e < an.children.size(); ++e) {
      const PftBeliefNode& child = *nodes_[an.children[e]];
      const double count = static_cast<double>(an.edge_counts[e]);
      KahanSum sub_lo, sub_hi;
      sub_lo.add(child.rollout_lower);
      sub_hi.add(child.rollout_upper);
      for (int aid : child.action_children) {
        const PftActionNode& ca = *anodes_[aid];
        sub_lo.add(ca.visits * ca.q_lower);
        sub_hi.add(ca.visits * ca.q_upper);
      }
      lo.add(count * child.reward.lower + spec_.gamma * sub_lo.value());
      hi.add(count * child.reward.upper + spec_.gamma * sub_hi.value());
    }
    an.q_lower = lo.value() / an.visits;
    an.q_upper = hi.value() / an.visits;
  }

  // ---- diagnostics ----

  std::uint64_t fingerprint() const {
    std::uint64_t h = mix64(0x5e6d1ULL + nodes_.size() * 31 + anodes_.size());
    for (const auto& node : nodes_) {
      h = mix64(h ^ static_cast<std::uint64_t>(node->parent_action + 1));
      h = mix64(h ^ static_cast<std::uint64_t>(node->visits));
      for (double v : node->belief.states) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
      for (double v : node->belief.raw_weights) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
    }
    for (const auto& an : anodes_) {
      h = mix64(h ^ static_cast<std::uint64_t>(an->parent));
      h = mix64(h ^ static_cast<std::uint64_t>(an->action));
      h = mix64(h ^ static_cast<std::uint64_t>(an->visits));
      for (int c : an->children) h = mix64(h ^ static_cast<std::uint64_t>(c));
    }
    return h;
  }

  void record_final_levels() {
    for (const auto& node : nodes_) {
      if (node->parent_action < 0) continue;
      ledger_->final_levels.push_back({params_.depth - node->depth_remaining,
                                       node->belief.size(),
                                       schedule_.level_sizes[node->reward.level - 1]});
      for (const PftRolloutStep& step : node->rollout_steps) {
        ledger_->final_levels.push_back({params_.depth - node->depth_remaining,
                                         step.post.size(),
                                         schedule_.level_sizes[step.reward.level - 1]});
      }
    }
  }

  const TransitionModel* transition_;
  const ObservationModel* obs_;
  RewardSpec spec_;
  std::vector<std::vector<double>> actions_;
  PftParams params_;
  int terminal_action_;
  std::function<double(const WeightedParticleBelief&)> terminal_reward_;
  double density_sup_;

  std::uint64_t seed_ = 0;
  RunLedger* ledger_ = nullptr;
  SimplificationSchedule schedule_;
  std::vector<std::unique_ptr<PftBeliefNode>> nodes_;
  std::vector<std::unique_ptr<PftActionNode>> anodes_;
  int marker_ = std::numeric_limits<int>::max();
  int promotions_ = 0;
};

}  // namespace belplan
