// Entropy estimator and adaptive bounds, checked against independent naive
// oracles (tests/support/instances.hpp) and closed-form small cases.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "belplan/entropy.hpp"
#include "belplan/reward.hpp"
#include "support/instances.hpp"

using namespace belplan;
using testsupport::Instance;
using testsupport::make_random_instance;

TEST_CASE("single-particle estimator collapses to the transition log-density") {
  // With one particle (w = w' = 1) the estimator reduces to
  // log p_Z - (log p_Z + log p_T) = -log p_T(x' | x, a).
  IsotropicGaussianDrift drift(1, 0.4);
  IsotropicGaussianObservation obs(1, 0.3);
  auto prev = make_belief(1, {0.2}, {1.0});
  auto post = make_belief(1, {0.9}, {1.0});
  const double a = 0.5, z = 1.1;
  const double h = boers_entropy(prev, &a, &z, post, drift, obs);
  CHECK_THAT(h, Catch::Matchers::WithinAbs(-drift.log_density(post.state(0), prev.state(0), &a),
                                           1e-12));
}

TEST_CASE("two-particle estimator matches a hand computation") {
  IsotropicGaussianDrift drift(1, 0.5);
  IsotropicGaussianObservation obs(1, 0.25);
  auto prev = make_belief(1, {-0.3, 0.4}, {0.6, 0.4});
  const double a = 0.2, z = 0.35;
  // Posterior states chosen by hand; weights via the SIS reweighting rule.
  std::vector<double> xp = {-0.05, 0.7};
  std::vector<double> wp(2);
  for (int i = 0; i < 2; ++i) {
    wp[i] = prev.weight(i) *
            std::exp(-0.5 * (z - xp[i]) * (z - xp[i]) / (0.25 * 0.25)) /
            std::sqrt(2.0 * M_PI * 0.25 * 0.25);
  }
  auto post = make_belief(1, std::vector<double>(xp), std::vector<double>(wp));

  auto pz = [&](double x) {
    return std::exp(-0.5 * (z - x) * (z - x) / (0.25 * 0.25)) /
           std::sqrt(2.0 * M_PI * 0.25 * 0.25);
  };
  auto pt = [&](double xn, double x) {
    const double d = xn - x - a;
    return std::exp(-0.5 * d * d / (0.5 * 0.5)) / std::sqrt(2.0 * M_PI * 0.5 * 0.5);
  };
  const double first = pz(xp[0]) * prev.weight(0) + pz(xp[1]) * prev.weight(1);
  double second = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double mix =
        pt(xp[i], prev.states[0]) * prev.weight(0) + pt(xp[i], prev.states[1]) * prev.weight(1);
    second += post.weight(i) * std::log(pz(xp[i]) * mix);
  }
  const double expect = std::log(first) - second;
  CHECK_THAT(boers_entropy(prev, &a, &z, post, drift, obs),
             Catch::Matchers::WithinAbs(expect, 1e-12));
}

TEST_CASE("estimator agrees with the naive transcription on random instances") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Instance inst = make_random_instance(seed, 25);
    const double h = boers_entropy(inst.prev, inst.action.data(), inst.observation.data(),
                                   inst.post, *inst.transition, *inst.obs);
    CHECK_THAT(h, Catch::Matchers::WithinAbs(testsupport::naive_boers(inst), 1e-9));
  }
}

TEST_CASE("bounds match the naive formulas at every level") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    Instance inst = make_random_instance(seed, 20);
    const auto p = inst.problem();
    for (int s = 1; s <= inst.chain_prev.schedule.n_max; ++s) {
      const auto state = entropy_bounds_at_level(p, s);
      const auto naive = testsupport::naive_bounds(inst, s);
      CHECK_THAT(state.lower, Catch::Matchers::WithinAbs(naive.lower, 1e-9));
      CHECK_THAT(state.upper, Catch::Matchers::WithinAbs(naive.upper, 1e-9));
    }
  }
}

TEST_CASE("bounds bracket the negative estimate and tighten monotonically") {
  for (std::uint64_t seed = 50; seed < 80; ++seed) {
    Instance inst = make_random_instance(seed, 30);
    const auto p = inst.problem();
    const double minus_h =
        -boers_entropy(inst.prev, inst.action.data(), inst.observation.data(), inst.post,
                       *inst.transition, *inst.obs);
    double prev_lower = -1e308, prev_upper = 1e308;
    for (int s = 1; s <= inst.chain_prev.schedule.n_max; ++s) {
      const auto state = entropy_bounds_at_level(p, s);
      CHECK(state.lower <= minus_h + 1e-9);
      CHECK(state.upper >= minus_h - 1e-9);
      CHECK(state.lower >= prev_lower - 1e-10);
      CHECK(state.upper <= prev_upper + 1e-10);
      prev_lower = state.lower;
      prev_upper = state.upper;
    }
  }
}

TEST_CASE("bounds collapse onto the estimate at the maximum level") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    Instance inst = make_random_instance(seed, 30);
    const auto p = inst.problem();
    const double minus_h =
        -boers_entropy(inst.prev, inst.action.data(), inst.observation.data(), inst.post,
                       *inst.transition, *inst.obs);
    const auto state = entropy_bounds_at_level(p, inst.chain_prev.schedule.n_max);
    CHECK_THAT(state.lower, Catch::Matchers::WithinAbs(minus_h, 1e-10));
    CHECK_THAT(state.upper, Catch::Matchers::WithinAbs(minus_h, 1e-10));
  }
}

TEST_CASE("incremental promotion equals the from-scratch computation") {
  for (std::uint64_t seed = 200; seed < 230; ++seed) {
    Instance inst = make_random_instance(seed, 24);
    const auto p = inst.problem();
    auto state = entropy_bounds_at_level(p, 1);
    for (int s = 2; s <= inst.chain_prev.schedule.n_max; ++s) {
      promote_entropy_bounds(p, state);
      const auto scratch = entropy_bounds_at_level(p, s);
      REQUIRE(state.level == s);
      CHECK_THAT(state.lower, Catch::Matchers::WithinAbs(scratch.lower, 1e-10));
      CHECK_THAT(state.upper, Catch::Matchers::WithinAbs(scratch.upper, 1e-10));
    }
    CHECK_THROWS_AS(promote_entropy_bounds(p, state), AlreadyAtMaxLevel);
  }
}

TEST_CASE("ledger charges follow the cost model") {
  Instance inst = make_random_instance(7, 30);
  const auto p = inst.problem();
  const int n = 30;

  SECTION("full estimator: n_x^2 motion, n_x observation") {
    RunLedger ledger;
    boers_entropy(inst.prev, inst.action.data(), inst.observation.data(), inst.post,
                  *inst.transition, *inst.obs, &ledger);
    CHECK(ledger.motion_calls == static_cast<std::uint64_t>(n) * n);
    CHECK(ledger.obs_calls == static_cast<std::uint64_t>(n));
  }
  SECTION("level-s bounds: n^s * n_x motion, n_x observation") {
    for (int s = 1; s <= inst.chain_prev.schedule.n_max; ++s) {
      RunLedger ledger;
      entropy_bounds_at_level(p, s, &ledger);
      const auto n_s = static_cast<std::uint64_t>(inst.chain_prev.level_size(s));
      CHECK(ledger.motion_calls == n_s * n);
      CHECK(ledger.obs_calls == static_cast<std::uint64_t>(n));
    }
  }
  SECTION("promotion: delta * n_x motion, no new observation work") {
    RunLedger ledger;
    auto state = entropy_bounds_at_level(p, 1, &ledger);
    for (int s = 2; s <= inst.chain_prev.schedule.n_max; ++s) {
      const std::uint64_t before = ledger.motion_calls;
      const std::uint64_t obs_before = ledger.obs_calls;
      promote_entropy_bounds(p, state, &ledger);
      const auto delta = static_cast<std::uint64_t>(inst.chain_prev.level_size(s) -
                                                    inst.chain_prev.level_size(s - 1));
      CHECK(ledger.motion_calls - before == delta * n);
      CHECK(ledger.obs_calls == obs_before);
    }
    // Telescoped: reaching level n_max incrementally costs exactly n_x^2.
    CHECK(ledger.motion_calls == static_cast<std::uint64_t>(n) * n);
  }
}

TEST_CASE("composite reward interval wraps the entropy bounds") {
  Instance inst = make_random_instance(300, 20);
  const auto p = inst.problem();
  RewardSpec spec;
  spec.lambda = 0.3;
  spec.state_reward = [](const double* x, const double*) { return -std::abs(x[0]); };

  const double rx = expected_state_reward(inst.post, inst.action.data(), spec);
  for (int s = 1; s <= inst.chain_prev.schedule.n_max; ++s) {
    const auto es = entropy_bounds_at_level(p, s);
    const auto ri = composite_reward_bounds(p, spec, s);
    CHECK_THAT(ri.lower, Catch::Matchers::WithinAbs(0.7 * rx + 0.3 * es.lower, 1e-12));
    CHECK_THAT(ri.upper, Catch::Matchers::WithinAbs(0.7 * rx + 0.3 * es.upper, 1e-12));
    CHECK(ri.level == s);
  }

  // Promotion through the reward wrapper tracks the entropy promotion and
  // reports saturation at the top level.
  auto ri = composite_reward_bounds(p, spec, 1);
  for (int s = 2; s <= inst.chain_prev.schedule.n_max; ++s) {
    CHECK(promote_reward(p, ri, spec));
    CHECK(ri.level == s);
  }
  CHECK_FALSE(promote_reward(p, ri, spec));
  const double exact = composite_reward(inst.prev, inst.action.data(), inst.observation.data(),
                                        inst.post, *inst.transition, *inst.obs, spec);
  CHECK_THAT(ri.lower, Catch::Matchers::WithinAbs(exact, 1e-10));
  CHECK_THAT(ri.upper, Catch::Matchers::WithinAbs(exact, 1e-10));
}

TEST_CASE("safety reward thresholds on the safe-region mass") {
  SafetySpec safety;
  safety.delta = 0.9;
  safety.safety_weight = 500.0;
  safety.safe_region = [](const double* x) { return x[0] >= 0.0; };
  // 0.95 of the mass is safe.
  auto safe_belief = make_belief(1, {1.0, -1.0}, {0.95, 0.05});
  CHECK(safety_reward(safe_belief, safety) == 500.0);
  // 0.85 of the mass is safe.
  auto unsafe_belief = make_belief(1, {1.0, -1.0}, {0.85, 0.15});
  CHECK(safety_reward(unsafe_belief, safety) == -500.0);
}
