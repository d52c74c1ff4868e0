#pragma once

// Randomized linear-Gaussian test instances and independent naive oracles for
// the entropy estimator and its bounds.  The oracle code deliberately avoids
// the library's cached/streamed implementation: plain loops, plain summation.

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "belplan/belief.hpp"
#include "belplan/entropy.hpp"
#include "belplan/models.hpp"
#include "belplan/rng.hpp"

namespace testsupport {

struct Instance {
  belplan::WeightedParticleBelief prev;
  belplan::WeightedParticleBelief post;
  std::vector<double> action;
  std::vector<double> observation;
  std::shared_ptr<belplan::IsotropicGaussianDrift> transition;
  std::shared_ptr<belplan::IsotropicGaussianObservation> obs;
  belplan::IndexChain chain_prev;
  belplan::IndexChain chain_post;

  belplan::EntropyBoundsProblem problem() const {
    belplan::EntropyBoundsProblem p;
    p.prev = &prev;
    p.post = &post;
    p.action = action;
    p.observation = observation;
    p.transition = transition.get();
    p.obs = obs.get();
    p.m = transition->density_max();
    p.chain_prev = &chain_prev;
    p.chain_post = &chain_post;
    return p;
  }
};

// Random instance: random dimension (1 or 2), random sigmas, random prior
// particles with random positive weights, one pf-style propagation, and a
// random schedule (n_max between 2 and 6 levels).
inline Instance make_random_instance(std::uint64_t seed, int n_x) {
  using namespace belplan;
  Rng rng = make_stream(seed, Purpose::kInstance);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int dim = (rng() & 1) ? 2 : 1;
  const double sigma_t = 0.2 + 0.8 * unif(rng);
  const double sigma_o = 0.2 + 0.8 * unif(rng);

  Instance inst;
  inst.transition = std::make_shared<IsotropicGaussianDrift>(dim, sigma_t);
  inst.obs = std::make_shared<IsotropicGaussianObservation>(dim, sigma_o);

  std::normal_distribution<double> prior(0.0, 1.5);
  std::vector<double> states(static_cast<std::size_t>(n_x) * dim);
  std::vector<double> weights(n_x);
  for (auto& v : states) v = prior(rng);
  for (auto& w : weights) w = 0.05 + unif(rng);
  inst.prev = make_belief(dim, std::move(states), std::move(weights));

  inst.action.resize(dim);
  for (auto& a : inst.action) a = 2.0 * unif(rng) - 1.0;

  // Propagate and reweight against a sampled observation.
  std::vector<double> x_true(dim);
  inst.transition->sample(inst.prev.state(static_cast<int>(rng() % n_x)), inst.action.data(),
                          x_true.data(), rng);
  inst.observation.resize(dim);
  inst.obs->sample(x_true.data(), inst.observation.data(), rng);
  inst.post = pf_update(inst.prev, inst.action.data(), inst.observation.data(),
                        *inst.transition, *inst.obs, rng);

  const int n_max = 2 + static_cast<int>(rng() % 5);
  const SimplificationSchedule sched = default_schedule(n_x, n_max);
  Rng chain_rng_prev = make_stream(seed, Purpose::kIndexChain, 0);
  Rng chain_rng_post = make_stream(seed, Purpose::kIndexChain, 1);
  inst.chain_prev = make_index_chain(n_x, sched, chain_rng_prev);
  inst.chain_post = make_index_chain(n_x, sched, chain_rng_post);
  return inst;
}

// Direct transcription of the estimator formula, plain summation.
inline double naive_boers(const Instance& inst) {
  const auto& prev = inst.prev;
  const auto& post = inst.post;
  const int n = prev.size();
  double first = 0.0;
  for (int i = 0; i < n; ++i) {
    first += inst.obs->density(inst.observation.data(), post.state(i)) * prev.weight(i);
  }
  double second = 0.0;
  for (int i = 0; i < n; ++i) {
    double mix = 0.0;
    for (int j = 0; j < n; ++j) {
      mix += inst.transition->density(post.state(i), prev.state(j), inst.action.data()) *
             prev.weight(j);
    }
    const double pz = inst.obs->density(inst.observation.data(), post.state(i));
    second += post.weight(i) * std::log(std::max(pz, 1e-300) * std::max(mix, 1e-300));
  }
  return std::log(std::max(first, 1e-300)) - second;
}

struct NaiveBounds {
  double lower;
  double upper;
};

// Direct transcription of the two bound formulas at the given level.
inline NaiveBounds naive_bounds(const Instance& inst, int level) {
  const auto& prev = inst.prev;
  const auto& post = inst.post;
  const int n = prev.size();
  const double m = inst.transition->density_max();
  const auto a_prev = inst.chain_prev.at_level(level).indices;
  const auto a_post = inst.chain_post.at_level(level).indices;
  std::vector<char> in_prev(n, 0), in_post(n, 0);
  for (int j : a_prev) in_prev[j] = 1;
  for (int i : a_post) in_post[i] = 1;

  double first = 0.0;
  for (int i = 0; i < n; ++i) {
    first += inst.obs->density(inst.observation.data(), post.state(i)) * prev.weight(i);
  }
  const double log_first = std::log(std::max(first, 1e-300));

  double lower = -log_first;
  for (int i = 0; i < n; ++i) {
    double mix = 0.0;
    for (int j = 0; j < n; ++j) {
      if (!in_prev[j]) continue;
      mix += inst.transition->density(post.state(i), prev.state(j), inst.action.data()) *
             prev.weight(j);
    }
    const double pz = inst.obs->density(inst.observation.data(), post.state(i));
    lower += post.weight(i) *
             (std::log(std::max(pz, 1e-300)) + std::log(std::max(mix, 1e-300)));
  }

  double upper = -log_first;
  for (int i = 0; i < n; ++i) {
    const double pz = inst.obs->density(inst.observation.data(), post.state(i));
    if (in_post[i]) {
      double mix = 0.0;
      for (int j = 0; j < n; ++j) {
        mix += inst.transition->density(post.state(i), prev.state(j), inst.action.data()) *
               prev.weight(j);
      }
      upper += post.weight(i) *
               (std::log(std::max(pz, 1e-300)) + std::log(std::max(mix, 1e-300)));
    } else {
      upper += post.weight(i) * std::log(m * std::max(pz, 1e-300));
    }
  }
  return {lower, upper};
}

}  // namespace testsupport
