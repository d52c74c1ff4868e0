#pragma once

// Weighted-particle beliefs and the nested index-set machinery that realizes
// discrete simplification levels.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "belplan/common.hpp"
#include "belplan/rng.hpp"

namespace belplan {

// A belief is a fixed-size set of weighted state samples.  Raw weights are
// stored unnormalized together with a cached normalizer; this keeps
// zero-likelihood detection exact and makes normalization idempotent
// bit-for-bit (normalizing never rewrites the raw weights).
struct WeightedParticleBelief {
  int dim = 0;
  std::vector<double> states;       // n_x * dim, row-major
  std::vector<double> raw_weights;  // n_x, nonnegative
  double normalizer = 0.0;          // compensated sum of raw_weights

  int size() const { return static_cast<int>(raw_weights.size()); }
  const double* state(int i) const { return states.data() + static_cast<std::size_t>(i) * dim; }
  double* state(int i) { return states.data() + static_cast<std::size_t>(i) * dim; }
  double weight(int i) const { return raw_weights[i] / normalizer; }

  // Materializes the normalized weight vector (hot loops index it directly).
  std::vector<double> normalized_weights() const {
    std::vector<double> w(raw_weights.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = raw_weights[i] / normalizer;
    return w;
  }
};

inline WeightedParticleBelief normalize_weights(WeightedParticleBelief belief) {
  KahanSum total;
  for (double w : belief.raw_weights) total.add(w);
  const double sum = total.value();
  if (!(sum > 0.0)) throw AllWeightsZero();
  belief.normalizer = sum;
  return belief;
}

inline WeightedParticleBelief make_belief(int dim, std::vector<double> states,
                                          std::vector<double> weights) {
  WeightedParticleBelief b;
  b.dim = dim;
  b.states = std::move(states);
  b.raw_weights = std::move(weights);
  return normalize_weights(std::move(b));
}

// Systematic resampling to an equally weighted particle set of the same size.
// Used between steps of passive filtering studies; planners never resample.
inline WeightedParticleBelief resample_belief(const WeightedParticleBelief& b, Rng& rng) {
  const int n = b.size();
  const std::vector<double> w = b.normalized_weights();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double start = unif(rng) / n;
  std::vector<double> states(static_cast<std::size_t>(n) * b.dim);
  double cum = w[0];
  int j = 0;
  for (int i = 0; i < n; ++i) {
    const double u = start + static_cast<double>(i) / n;
    while (cum < u && j + 1 < n) cum += w[++j];
    const double* src = b.state(j);
    std::copy(src, src + b.dim, states.begin() + static_cast<std::size_t>(i) * b.dim);
  }
  return make_belief(b.dim, std::move(states), std::vector<double>(n, 1.0));
}

// Discrete simplification levels s in {1, ..., n_max}; level_sizes[s-1] gives
// n_x^s, strictly increasing with level_sizes.back() == n_x.
struct SimplificationSchedule {
  int n_max = 0;
  std::vector<int> level_sizes;

  bool valid_for(int n_x) const {
    if (n_max < 1 || static_cast<int>(level_sizes.size()) != n_max) return false;
    if (level_sizes.front() < 1 || level_sizes.back() != n_x) return false;
    for (int s = 1; s < n_max; ++s) {
      if (level_sizes[s - 1] >= level_sizes[s]) return false;
    }
    return true;
  }
};

// Default grid: 10 equally spaced levels, n_x^s = ceil(s * n_x / n_max),
// e.g. 10, 20, ..., 100 for n_x = 100.
inline SimplificationSchedule default_schedule(int n_x, int n_max = 10) {
  n_max = std::min(n_max, n_x);
  SimplificationSchedule sched;
  sched.n_max = n_max;
  sched.level_sizes.resize(n_max);
  for (int s = 1; s <= n_max; ++s) {
    sched.level_sizes[s - 1] =
        static_cast<int>((static_cast<long long>(s) * n_x + n_max - 1) / n_max);
  }
  return sched;
}

struct SimplificationIndexSet {
  int level = 0;
  std::vector<int> indices;  // ordered, size == level_sizes[level-1]
};

// A full nested chain A^1 c A^2 c ... c A^{n_max}, stored compactly as one
// permutation of particle indices: level s is the prefix of length
// level_sizes[s-1].  Nesting and the incremental-promotion delta sets fall out
// of the representation.
struct IndexChain {
  SimplificationSchedule schedule;
  std::vector<int> order;  // a permutation of 0..n_x-1

  int level_size(int level) const { return schedule.level_sizes[level - 1]; }
  // Indices of level s (first level_size(s) entries of the permutation).
  const int* begin_of(int) const { return order.data(); }
  SimplificationIndexSet at_level(int level) const {
    SimplificationIndexSet set;
    set.level = level;
    set.indices.assign(order.begin(), order.begin() + level_size(level));
    return set;
  }
};

// Draws the chain uniformly without replacement: a Fisher-Yates shuffle of all
// indices; prefixes of the shuffled permutation are the nested level sets.
// Pure function of (rng state, n_x, schedule).
inline IndexChain make_index_chain(int n_x, const SimplificationSchedule& schedule, Rng& rng) {
  if (!schedule.valid_for(n_x)) throw PlanningError("schedule invalid for n_x");
  IndexChain chain;
  chain.schedule = schedule;
  chain.order.resize(n_x);
  std::iota(chain.order.begin(), chain.order.end(), 0);
  for (int i = 0; i < n_x - 1; ++i) {
    std::uniform_int_distribution<int> pick(i, n_x - 1);
    std::swap(chain.order[i], chain.order[pick(rng)]);
  }
  return chain;
}

inline std::vector<SimplificationIndexSet> make_index_chain_sets(
    int n_x, const SimplificationSchedule& schedule, Rng& rng) {
  const IndexChain chain = make_index_chain(n_x, schedule, rng);
  std::vector<SimplificationIndexSet> sets;
  sets.reserve(schedule.n_max);
  for (int s = 1; s <= schedule.n_max; ++s) sets.push_back(chain.at_level(s));
  return sets;
}

}  // namespace belplan
