// Sparse given-tree construction and the three solvers, checked against an
// independent plain-recursion oracle.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "belplan/given_tree.hpp"
#include "support/instances.hpp"

using namespace belplan;

namespace {

struct Fixture {
  std::shared_ptr<IsotropicGaussianDrift> transition;
  std::shared_ptr<IsotropicGaussianObservation> obs;
  WeightedParticleBelief root;
  GivenTreeParams params;
  RewardSpec spec;
};

Fixture make_fixture(std::uint64_t seed, int n_x, int n_actions, std::vector<int> n_z, int L,
                     int n_max) {
  Fixture f;
  f.transition = std::make_shared<IsotropicGaussianDrift>(1, 0.4);
  f.obs = std::make_shared<IsotropicGaussianObservation>(1, 0.5);
  Rng rng = make_stream(seed, Purpose::kInitialBelief);
  std::normal_distribution<double> draw(0.0, 1.0);
  std::vector<double> states(n_x);
  for (auto& x : states) x = draw(rng);
  f.root = make_belief(1, std::move(states), std::vector<double>(n_x, 1.0));
  for (int a = 0; a < n_actions; ++a) {
    f.params.actions.push_back({-1.0 + 2.0 * a / std::max(1, n_actions - 1)});
  }
  f.params.obs_per_depth = std::move(n_z);
  f.params.depth_limit = L;
  f.params.n_max = n_max;
  f.spec.lambda = 0.4;
  f.spec.gamma = 0.9;
  f.spec.state_reward = [](const double* x, const double*) { return -x[0] * x[0]; };
  return f;
}

// Plain-recursion oracle for the exact solve, using the naive estimator
// transcription rather than the library's entropy code.
double oracle_value(const GivenTree& tree, const GivenTreeNode& node, const RewardSpec& spec,
                    std::vector<double>* root_q) {
  if (node.is_leaf()) return 0.0;
  double best = -1e308;
  for (std::size_t a = 0; a < node.children.size(); ++a) {
    double q = 0.0;
    for (int cid : node.children[a]) {
      const GivenTreeNode& child = *tree.nodes[cid];
      // Naive estimator, plain loops.
      const auto& prev = node.belief;
      const auto& post = child.belief;
      const int n = prev.size();
      double first = 0.0;
      for (int i = 0; i < n; ++i) {
        first += tree.obs->density(child.problem.observation.data(), post.state(i)) *
                 prev.weight(i);
      }
      double second = 0.0;
      for (int i = 0; i < n; ++i) {
        double mix = 0.0;
        for (int j = 0; j < n; ++j) {
          mix += tree.transition->density(post.state(i), prev.state(j),
                                          child.problem.action.data()) *
                 prev.weight(j);
        }
        second += post.weight(i) *
                  std::log(tree.obs->density(child.problem.observation.data(), post.state(i)) *
                           mix);
      }
      const double entropy = std::log(first) - second;
      double rx = 0.0;
      for (int i = 0; i < n; ++i) {
        rx += post.weight(i) * spec.state_reward(post.state(i), child.problem.action.data());
      }
      const double rho = (1.0 - spec.lambda) * rx + spec.lambda * (-entropy);
      q += rho + spec.gamma * oracle_value(tree, child, spec, nullptr);
    }
    q /= static_cast<double>(node.children[a].size());
    if (root_q != nullptr) root_q->push_back(q);
    if (q > best) best = q;
  }
  return best;
}

}  // namespace

TEST_CASE("tree construction is deterministic and has the expected shape") {
  auto f = make_fixture(5, 12, 3, {2, 2}, 2, 4);
  auto t1 = build_given_tree(f.root, *f.transition, *f.obs, f.params, 77);
  auto t2 = build_given_tree(f.root, *f.transition, *f.obs, f.params, 77);
  // |A| * n_z(0) children of the root, each with |A| * n_z(1) children.
  const int expect = 1 + 3 * 2 + 3 * 2 * 3 * 2;
  REQUIRE(static_cast<int>(t1.nodes.size()) == expect);
  REQUIRE(t2.nodes.size() == t1.nodes.size());
  for (std::size_t i = 0; i < t1.nodes.size(); ++i) {
    CHECK(t1.nodes[i]->depth == t2.nodes[i]->depth);
    CHECK(t1.nodes[i]->parent == t2.nodes[i]->parent);
    CHECK(t1.nodes[i]->belief.states == t2.nodes[i]->belief.states);
    CHECK(t1.nodes[i]->belief.raw_weights == t2.nodes[i]->belief.raw_weights);
    CHECK(t1.nodes[i]->chain.order == t2.nodes[i]->chain.order);
  }
  // A different seed reshuffles the sampled observations.
  auto t3 = build_given_tree(f.root, *f.transition, *f.obs, f.params, 78);
  CHECK(t3.nodes[1]->belief.states != t1.nodes[1]->belief.states);
}

TEST_CASE("exact solve matches the plain-recursion oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto f = make_fixture(seed, 10, 3, {2, 2}, 2, 5);
    auto tree = build_given_tree(f.root, *f.transition, *f.obs, f.params, seed);
    auto sol = solve_exact(tree, f.spec);
    std::vector<double> oq;
    const double ov = oracle_value(tree, tree.root(), f.spec, &oq);
    REQUIRE(sol.q_lower.size() == oq.size());
    for (std::size_t a = 0; a < oq.size(); ++a) {
      CHECK_THAT(sol.q_lower[a], Catch::Matchers::WithinAbs(oq[a], 1e-9));
      CHECK(sol.q_upper[a] == sol.q_lower[a]);
    }
    CHECK_THAT(sol.value_lower, Catch::Matchers::WithinAbs(ov, 1e-9));
    int best = 0;
    for (std::size_t a = 1; a < oq.size(); ++a) {
      if (oq[a] > oq[best]) best = static_cast<int>(a);
    }
    CHECK(sol.best_action == best);
  }
}

TEST_CASE("fixed-level intervals bracket the exact values and collapse on top") {
  auto f = make_fixture(9, 15, 3, {2, 2}, 2, 5);
  auto tree = build_given_tree(f.root, *f.transition, *f.obs, f.params, 9);
  auto exact = solve_exact(tree, f.spec);
  for (int s = 1; s <= f.params.n_max; ++s) {
    auto sol = solve_fixed_level(tree, f.spec, s);
    REQUIRE(sol.q_lower.size() == exact.q_lower.size());
    for (std::size_t a = 0; a < sol.q_lower.size(); ++a) {
      CHECK(sol.q_lower[a] <= exact.q_lower[a] + 1e-9);
      CHECK(sol.q_upper[a] >= exact.q_upper[a] - 1e-9);
    }
  }
  auto top = solve_fixed_level(tree, f.spec, f.params.n_max);
  for (std::size_t a = 0; a < top.q_lower.size(); ++a) {
    CHECK_THAT(top.q_lower[a], Catch::Matchers::WithinAbs(exact.q_lower[a], 1e-9));
    CHECK_THAT(top.q_upper[a], Catch::Matchers::WithinAbs(exact.q_lower[a], 1e-9));
  }
}

TEST_CASE("bounded solvers select the exact best action") {
  int pruning_saved_any = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto f = make_fixture(seed, 20, 3, {1, 2}, 2, 5);
    auto tree = build_given_tree(f.root, *f.transition, *f.obs, f.params, seed);

    RunLedger exact_ledger, pruning_ledger, lazy_ledger;
    auto exact = solve_exact(tree, f.spec, &exact_ledger);
    auto pruned = solve_bounded_pruning(tree, f.spec, &pruning_ledger);
    auto lazy = solve_bounded_lazy(tree, f.spec, &lazy_ledger);

    CHECK(pruned.best_action == exact.best_action);
    CHECK(lazy.best_action == exact.best_action);

    // Bounds at the chosen action contain the exact value.
    CHECK(pruned.q_lower[pruned.best_action] <= exact.q_lower[exact.best_action] + 1e-9);
    CHECK(pruned.q_upper[pruned.best_action] >= exact.q_lower[exact.best_action] - 1e-9);
    CHECK(lazy.q_lower[lazy.best_action] <= exact.q_lower[exact.best_action] + 1e-9);
    CHECK(lazy.q_upper[lazy.best_action] >= exact.q_lower[exact.best_action] - 1e-9);

    // Never more expensive than the baseline under the cost model.
    CHECK(pruning_ledger.motion_calls <= exact_ledger.motion_calls);
    CHECK(lazy_ledger.motion_calls <= exact_ledger.motion_calls);
    if (pruning_ledger.motion_calls < exact_ledger.motion_calls) ++pruning_saved_any;
  }
  // The adaptive solver actually saves work on a clear majority of instances.
  CHECK(pruning_saved_any >= 15);
}

TEST_CASE("solver ledgers follow the cost-model identities") {
  auto f = make_fixture(21, 16, 3, {1, 2}, 2, 4);
  auto tree = build_given_tree(f.root, *f.transition, *f.obs, f.params, 21);
  const auto non_root = static_cast<std::uint64_t>(tree.non_root_count());
  const std::uint64_t n = 16;

  RunLedger exact_ledger;
  solve_exact(tree, f.spec, &exact_ledger);
  CHECK(exact_ledger.motion_calls == non_root * n * n);
  CHECK(exact_ledger.obs_calls == non_root * n);

  for (int s = 1; s <= f.params.n_max; ++s) {
    RunLedger ledger;
    solve_fixed_level(tree, f.spec, s, &ledger);
    const auto n_s = static_cast<std::uint64_t>(tree.schedule.level_sizes[s - 1]);
    CHECK(ledger.motion_calls == non_root * n_s * n);
    CHECK(ledger.obs_calls == non_root * n);
  }

  // Bounded solves record one final level per non-root node.
  RunLedger pruning_ledger;
  solve_bounded_pruning(tree, f.spec, &pruning_ledger);
  CHECK(pruning_ledger.final_levels.size() == non_root);
  for (const auto& rec : pruning_ledger.final_levels) {
    CHECK(rec.n_s >= tree.schedule.level_sizes[0]);
    CHECK(rec.n_s <= static_cast<int>(n));
  }
}
