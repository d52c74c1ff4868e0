// Beliefs, index chains, models, and the particle-filter update.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <set>

#include "belplan/belief.hpp"
#include "belplan/models.hpp"
#include "belplan/rng.hpp"

using namespace belplan;

TEST_CASE("weight normalization") {
  SECTION("uniform pair") {
    auto b = make_belief(1, {0.0, 1.0}, {2.0, 2.0});
    CHECK(b.weight(0) == 0.5);
    CHECK(b.weight(1) == 0.5);
  }
  SECTION("mixed with a zero") {
    auto b = make_belief(1, {0.0, 1.0, 2.0}, {1.0, 0.0, 3.0});
    CHECK(b.weight(0) == 0.25);
    CHECK(b.weight(1) == 0.0);
    CHECK(b.weight(2) == 0.75);
  }
  SECTION("all-zero weights reject") {
    CHECK_THROWS_AS(make_belief(1, {0.0, 1.0}, {0.0, 0.0}), AllWeightsZero);
  }
  SECTION("normalization is idempotent bit-for-bit") {
    auto b = make_belief(2, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {0.3, 1.7, 0.01});
    auto b2 = normalize_weights(b);
    CHECK(b2.normalizer == b.normalizer);
    for (int i = 0; i < b.size(); ++i) CHECK(b2.weight(i) == b.weight(i));
  }
}

TEST_CASE("default simplification schedule") {
  const auto sched = default_schedule(100, 10);
  REQUIRE(sched.n_max == 10);
  for (int s = 1; s <= 10; ++s) CHECK(sched.level_sizes[s - 1] == 10 * s);
  CHECK(sched.valid_for(100));

  // Ceiling behaviour and strict monotonicity for awkward sizes.
  for (int n_x : {7, 13, 30, 101}) {
    const auto sc = default_schedule(n_x, 10);
    CHECK(sc.valid_for(n_x));
    CHECK(sc.level_sizes.back() == n_x);
    for (int s = 1; s <= sc.n_max; ++s) {
      const long long expect = (static_cast<long long>(s) * n_x + sc.n_max - 1) / sc.n_max;
      CHECK(sc.level_sizes[s - 1] == expect);
    }
  }
}

TEST_CASE("index chains are nested, uniform-prefix, deterministic") {
  const int n_x = 50;
  const auto sched = default_schedule(n_x, 5);
  Rng rng = make_stream(1234, Purpose::kIndexChain);
  const auto chain = make_index_chain(n_x, sched, rng);

  // The order is a permutation.
  std::set<int> seen(chain.order.begin(), chain.order.end());
  REQUIRE(static_cast<int>(seen.size()) == n_x);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == n_x - 1);

  // Nesting: each level's set contains the previous level's set.
  for (int s = 2; s <= sched.n_max; ++s) {
    const auto lo = chain.at_level(s - 1).indices;
    const auto hi = chain.at_level(s).indices;
    std::set<int> hi_set(hi.begin(), hi.end());
    for (int idx : lo) CHECK(hi_set.count(idx) == 1);
    CHECK(static_cast<int>(hi.size()) == sched.level_sizes[s - 1]);
  }

  // Same stream key reproduces the same chain.
  Rng rng2 = make_stream(1234, Purpose::kIndexChain);
  const auto chain2 = make_index_chain(n_x, sched, rng2);
  CHECK(chain2.order == chain.order);

  // Different key yields a different permutation (overwhelmingly likely).
  Rng rng3 = make_stream(1235, Purpose::kIndexChain);
  const auto chain3 = make_index_chain(n_x, sched, rng3);
  CHECK(chain3.order != chain.order);
}

TEST_CASE("index-chain prefixes are uniform subsets") {
  // Every particle should appear in the level-1 set with equal frequency.
  const int n_x = 10;
  const auto sched = default_schedule(n_x, 5);  // level 1 has 2 indices
  std::vector<int> hits(n_x, 0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_stream(99, Purpose::kIndexChain, static_cast<std::uint64_t>(t));
    const auto chain = make_index_chain(n_x, sched, rng);
    for (int s = 0; s < sched.level_sizes[0]; ++s) ++hits[chain.order[s]];
  }
  const double expect = trials * static_cast<double>(sched.level_sizes[0]) / n_x;
  for (int i = 0; i < n_x; ++i) {
    CHECK(std::abs(hits[i] - expect) < 5.0 * std::sqrt(expect));
  }
}

TEST_CASE("gaussian transition density and supremum") {
  IsotropicGaussianDrift drift(2, 0.1);
  // Supremum of a 2D isotropic Gaussian: 1 / (2 pi sigma^2).
  CHECK_THAT(drift.density_max(),
             Catch::Matchers::WithinRel(1.0 / (2.0 * M_PI * 0.01), 1e-12));
  // Density at the mean attains the supremum.
  const double x[2] = {0.3, -0.7};
  const double a[2] = {1.0, 0.5};
  const double mean[2] = {1.3, -0.2};
  CHECK_THAT(drift.density(mean, x, a), Catch::Matchers::WithinRel(drift.density_max(), 1e-12));
  // One sigma out along one axis: factor exp(-1/2).
  const double off[2] = {1.4, -0.2};
  CHECK_THAT(drift.density(off, x, a),
             Catch::Matchers::WithinRel(drift.density_max() * std::exp(-0.5), 1e-12));

  IsotropicGaussianDrift drift1(1, 0.5);
  CHECK_THAT(drift1.density_max(),
             Catch::Matchers::WithinRel(1.0 / std::sqrt(2.0 * M_PI * 0.25), 1e-12));
}

TEST_CASE("beacon observation noise scaling") {
  BeaconObservationModel obs({0.0, 0.0, 2.0, 0.0}, 0.1, 0.0001);
  const double near[2] = {0.0, 0.0};
  CHECK_THAT(obs.noise_scale(near), Catch::Matchers::WithinRel(0.1 * 0.0001, 1e-12));
  const double far[2] = {1.0, 0.0};  // distance 1 to both beacons
  CHECK_THAT(obs.noise_scale(far), Catch::Matchers::WithinRel(0.1, 1e-12));
  // z is measured relative to the nearest beacon.
  const double x[2] = {1.9, 0.3};
  const double z_exact[2] = {-0.1, 0.3};
  const double z_wrong[2] = {1.9, 0.3};
  CHECK(obs.density(z_exact, x) > obs.density(z_wrong, x));
}

TEST_CASE("absolute-position observation saturates past unit distance") {
  AbsolutePositionObservationModel obs(0.0, 0.0, 0.075, 0.0001);
  const double close[2] = {0.5, 0.0};
  CHECK_THAT(obs.noise_scale(close), Catch::Matchers::WithinRel(0.075 * 0.5, 1e-12));
  const double far[2] = {10.0, 3.0};
  CHECK_THAT(obs.noise_scale(far), Catch::Matchers::WithinRel(0.075, 1e-12));
}

TEST_CASE("pf update reweights proportionally to the likelihood") {
  // sigma_T -> tiny makes propagation nearly deterministic, so the posterior
  // weights must be proportional to prior weight times observation likelihood
  // at the shifted particle.
  const int n = 4;
  IsotropicGaussianDrift drift(1, 1e-8);
  IsotropicGaussianObservation obs(1, 0.5);
  auto prior = make_belief(1, {-1.0, 0.0, 1.0, 2.0}, {0.1, 0.4, 0.3, 0.2});
  const double a = 0.5;
  const double z = 0.6;
  Rng rng = make_stream(7, Purpose::kPropagate);
  auto post = pf_update(prior, &a, &z, drift, obs, rng);
  REQUIRE(post.size() == n);
  double expect[n];
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double mean = prior.states[i] + a;
    expect[i] = prior.weight(i) * std::exp(-0.5 * (z - mean) * (z - mean) / 0.25) /
                std::sqrt(2.0 * M_PI * 0.25);
    total += expect[i];
  }
  for (int i = 0; i < n; ++i) {
    CHECK_THAT(post.weight(i), Catch::Matchers::WithinRel(expect[i] / total, 1e-5));
  }
}

TEST_CASE("pf update matches the kalman posterior mean on a linear problem") {
  // 1D linear-Gaussian: prior N(mu0, s0^2), transition adds a and N(0, sT^2)
  // noise, observation z = x + N(0, sO^2).  The weighted particle mean after
  // one update must sit within a few standard errors of the Kalman mean.
  const int n = 5000;
  const double mu0 = 1.0, s0 = 2.0, sT = 0.3, sO = 0.5, a = -0.7, z = 0.2;
  Rng rng = make_stream(2024, Purpose::kInitialBelief);
  std::normal_distribution<double> prior_draw(mu0, s0);
  std::vector<double> states(n);
  for (auto& x : states) x = prior_draw(rng);
  auto prior = make_belief(1, std::move(states), std::vector<double>(n, 1.0));

  IsotropicGaussianDrift drift(1, sT);
  IsotropicGaussianObservation obs(1, sO);
  Rng prop = make_stream(2024, Purpose::kPropagate);
  auto post = pf_update(prior, &a, &z, drift, obs, prop);

  // Kalman: predict, then update.
  const double mu_pred = mu0 + a;
  const double var_pred = s0 * s0 + sT * sT;
  const double k = var_pred / (var_pred + sO * sO);
  const double mu_post = mu_pred + k * (z - mu_pred);
  const double var_post = (1.0 - k) * var_pred;

  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += post.weight(i) * post.states[i];
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    var += post.weight(i) * (post.states[i] - mean) * (post.states[i] - mean);
  }
  // Importance sampling inflates the effective sample size denominator; use a
  // conservative 3-SE band based on n.
  const double se = std::sqrt(var_post / n) * 3.0 * 3.0;
  CHECK(std::abs(mean - mu_post) < std::max(se, 0.05));
  CHECK_THAT(var, Catch::Matchers::WithinAbs(var_post, 0.05));
}

TEST_CASE("pf update rejects an impossible observation") {
  // Extremely tight observation noise far away from every propagated particle
  // underflows all weights to zero.
  IsotropicGaussianDrift drift(1, 1e-6);
  IsotropicGaussianObservation obs(1, 1e-6);
  auto prior = make_belief(1, {0.0, 0.1}, {1.0, 1.0});
  const double a = 0.0;
  const double z = 1000.0;
  Rng rng = make_stream(11, Purpose::kPropagate);
  CHECK_THROWS_AS(pf_update(prior, &a, &z, drift, obs, rng), ZeroLikelihoodObservation);
}

TEST_CASE("stream keys separate purposes and indices") {
  CHECK(stream_key(1, Purpose::kObsSample, 0) != stream_key(1, Purpose::kPropagate, 0));
  CHECK(stream_key(1, Purpose::kObsSample, 0) != stream_key(1, Purpose::kObsSample, 1));
  CHECK(stream_key(1, Purpose::kObsSample, 0, 0) != stream_key(1, Purpose::kObsSample, 0, 1));
  CHECK(stream_key(1, Purpose::kObsSample, 2) == stream_key(1, Purpose::kObsSample, 2));
  CHECK(sub_seed(5, 0) != sub_seed(5, 1));
}
