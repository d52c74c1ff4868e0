#pragma once

// Differential-entropy estimator over two consecutive particle beliefs and the
// adaptive lower/upper bounds on the negative estimate, with cached partial
// sums supporting incremental level promotion.
//
// Estimator (H-hat):
//   H = log[sum_i p_Z(z|x'_i) w_i] - sum_i w'_i log[p_Z(z|x'_i) sum_j p_T(x'_i|x_j,a) w_j]
// Bounds on -H at level s (row set A_post over the posterior particles, column
// set A_prev over the prior particles, m = sup p_T):
//   lower: all rows, column mixture restricted to A_prev;
//   upper: rows in A_post use the full column mixture, rows outside use m*p_Z.
//
// The n_x x n_x transition-kernel matrix is never materialized; columns are
// streamed into per-row partial sums (the lower bound's mixture), and covered
// rows complete their full mixture from the partial sum plus the residual
// columns.  Ledger charges follow the cost model documented in ledger.hpp.

#include <cmath>
#include <vector>

#include "belplan/belief.hpp"
#include "belplan/common.hpp"
#include "belplan/ledger.hpp"
#include "belplan/models.hpp"
#include "belplan/rng.hpp"

namespace belplan {

// One bound computation's inputs; beliefs/models/chains are borrowed and must
// outlive the bound state, action/observation are owned copies.
struct EntropyBoundsProblem {
  const WeightedParticleBelief* prev = nullptr;
  const WeightedParticleBelief* post = nullptr;
  std::vector<double> action;
  std::vector<double> observation;
  const TransitionModel* transition = nullptr;
  const ObservationModel* obs = nullptr;
  double m = 0.0;                        // transition density supremum
  const IndexChain* chain_prev = nullptr;  // column sets A^s_k
  const IndexChain* chain_post = nullptr;  // row sets A^s_{k+1}
};

struct EntropyTermCache {
  std::vector<double> obs_lik;      // p_Z(z | x'_i)
  std::vector<double> prior_mix;    // running partial sum over columns in A^s_prev
  std::vector<double> prior_mix_c;  // Neumaier compensations for prior_mix
  std::vector<double> full_mix;     // full column mixture, rows in A^s_post only
  std::vector<char> covered;        // row membership in A^s_post
  std::vector<char> in_prev;        // column membership in A^s_prev
  double first_term = 0.0;          // log sum_i p_Z w_i

  double prior_mix_value(int i) const { return prior_mix[i] + prior_mix_c[i]; }
};

struct EntropyBoundsState {
  int level = 0;
  double lower = 0.0;
  double upper = 0.0;
  EntropyTermCache cache;
};

namespace detail {

inline void neumaier_add(double& sum, double& comp, double x) {
  const double t = sum + x;
  if (std::abs(sum) >= std::abs(x)) {
    comp += (sum - t) + x;
  } else {
    comp += (x - t) + sum;
  }
  sum = t;
}

inline void fill_obs_and_first_term(const EntropyBoundsProblem& p, EntropyTermCache& cache,
                                    RunLedger* ledger) {
  const int n = p.post->size();
  cache.obs_lik.resize(n);
  KahanSum first;
  for (int i = 0; i < n; ++i) {
    const double lik = p.obs->density(p.observation.data(), p.post->state(i));
    if (std::isnan(lik) || lik < 0.0) throw NonpositiveLikelihood();
    cache.obs_lik[i] = lik;
    first.add(lik * p.prev->weight(i));
  }
  if (ledger != nullptr) ledger->obs_calls += static_cast<std::uint64_t>(n);
  cache.first_term = floored_log(first.value());
}

// Streams the given prior-particle columns into every row's partial mixture.
// Charged to the ledger: one motion unit per (row, new column) pair.
inline void add_columns(const EntropyBoundsProblem& p, EntropyTermCache& cache,
                        const int* cols, int count, RunLedger* ledger) {
  const int n = p.post->size();
  for (int c = 0; c < count; ++c) {
    const int j = cols[c];
    cache.in_prev[j] = 1;
    const double wj = p.prev->weight(j);
    const double* xj = p.prev->state(j);
    for (int i = 0; i < n; ++i) {
      const double k = p.transition->density(p.post->state(i), xj, p.action.data());
      neumaier_add(cache.prior_mix[i], cache.prior_mix_c[i], k * wj);
    }
  }
  if (ledger != nullptr) {
    ledger->motion_calls += static_cast<std::uint64_t>(count) * static_cast<std::uint64_t>(n);
  }
}

// Completes the full column mixture for newly covered rows.  Reuses the
// cached partial sum; the residual kernel terms are cache work outside the
// cost model and are not charged.
inline void cover_rows(const EntropyBoundsProblem& p, EntropyTermCache& cache, const int* rows,
                       int count) {
  const int n = p.prev->size();
  for (int r = 0; r < count; ++r) {
    const int i = rows[r];
    cache.covered[i] = 1;
    KahanSum residual;
    for (int j = 0; j < n; ++j) {
      if (cache.in_prev[j]) continue;
      residual.add(p.transition->density(p.post->state(i), p.prev->state(j), p.action.data()) *
                   p.prev->weight(j));
    }
    cache.full_mix[i] = cache.prior_mix_value(i) + residual.value();
  }
}

inline void recompute_bounds(const EntropyBoundsProblem& p, EntropyBoundsState& state) {
  const int n = p.post->size();
  const double log_m = std::log(p.m);
  KahanSum lo, hi;
  for (int i = 0; i < n; ++i) {
    const double wi = p.post->weight(i);
    const double log_obs = floored_log(state.cache.obs_lik[i]);
    lo.add(wi * (log_obs + floored_log(state.cache.prior_mix_value(i))));
    if (state.cache.covered[i]) {
      hi.add(wi * (log_obs + floored_log(state.cache.full_mix[i])));
    } else {
      hi.add(wi * (log_obs + log_m));
    }
  }
  state.lower = -state.cache.first_term + lo.value();
  state.upper = -state.cache.first_term + hi.value();
}

}  // namespace detail

// Direct estimator; Theta(n_x t_obs + n_x^2 t_mot).
inline double boers_entropy(const WeightedParticleBelief& prev, const double* action,
                            const double* observation, const WeightedParticleBelief& post,
                            const TransitionModel& transition, const ObservationModel& obs,
                            RunLedger* ledger = nullptr) {
  const int n = post.size();
  KahanSum first;
  std::vector<double> obs_lik(n);
  for (int i = 0; i < n; ++i) {
    const double lik = obs.density(observation, post.state(i));
    if (std::isnan(lik) || lik < 0.0) throw NonpositiveLikelihood();
    obs_lik[i] = lik;
    first.add(lik * prev.weight(i));
  }
  KahanSum second;
  for (int i = 0; i < n; ++i) {
    KahanSum mix;
    for (int j = 0; j < n; ++j) {
      mix.add(transition.density(post.state(i), prev.state(j), action) * prev.weight(j));
    }
    second.add(post.weight(i) * (floored_log(obs_lik[i]) + floored_log(mix.value())));
  }
  if (ledger != nullptr) {
    ledger->obs_calls += static_cast<std::uint64_t>(n);
    ledger->motion_calls += static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
  }
  return floored_log(first.value()) - second.value();
}

// From-scratch bound computation at the given level.
inline EntropyBoundsState entropy_bounds_at_level(const EntropyBoundsProblem& p, int level,
                                                  RunLedger* ledger = nullptr) {
  const int n = p.post->size();
  EntropyBoundsState state;
  state.level = level;
  EntropyTermCache& cache = state.cache;
  cache.prior_mix.assign(n, 0.0);
  cache.prior_mix_c.assign(n, 0.0);
  cache.full_mix.assign(n, 0.0);
  cache.covered.assign(n, 0);
  cache.in_prev.assign(n, 0);
  detail::fill_obs_and_first_term(p, cache, ledger);
  const int n_s = p.chain_prev->level_size(level);
  detail::add_columns(p, cache, p.chain_prev->order.data(), n_s, ledger);
  detail::cover_rows(p, cache, p.chain_post->order.data(), p.chain_post->level_size(level));
  detail::recompute_bounds(p, state);
  return state;
}

// Incremental promotion to level + 1; updates only the delta rows/columns.
inline void promote_entropy_bounds(const EntropyBoundsProblem& p, EntropyBoundsState& state,
                                   RunLedger* ledger = nullptr) {
  const int n_max = p.chain_prev->schedule.n_max;
  if (state.level >= n_max) throw AlreadyAtMaxLevel();
  const int s = state.level;
  const int old_cols = p.chain_prev->level_size(s);
  const int new_cols = p.chain_prev->level_size(s + 1);
  detail::add_columns(p, state.cache, p.chain_prev->order.data() + old_cols,
                      new_cols - old_cols, ledger);
  const int old_rows = p.chain_post->level_size(s);
  const int new_rows = p.chain_post->level_size(s + 1);
  detail::cover_rows(p, state.cache, p.chain_post->order.data() + old_rows,
                     new_rows - old_rows);
  state.level = s + 1;
  detail::recompute_bounds(p, state);
}

}  // namespace belplan
