#pragma once

// Instrumented counters backing the speedup metrics.
//
// motion_calls / obs_calls follow a fixed cost model for reward and bound
// evaluation only (belief-update calls are excluded):
//   - exact entropy estimator: n_x^2 motion + n_x observation units per reward;
//   - bounds at level s: n_x^s * n_x motion units (the column-stream work of
//     the lower bound) + n_x observation units;
//   - promotion s -> s+1: (n_x^{s+1} - n_x^s) * n_x motion units.
// This makes the accounting identities exact: reaching level s from level 1
// telescopes to n_x^s * n_x, and the baseline charges n_x^2 per non-root node.

#include <cstdint>
#include <vector>

namespace belplan {

struct LevelRecord {
  int depth = 0;       // tree depth of the posterior belief node
  int n_x = 0;         // unsimplified particle count
  int n_s = 0;         // final simplified particle count used for its reward
};

struct RunLedger {
  std::uint64_t motion_calls = 0;
  std::uint64_t obs_calls = 0;
  std::uint64_t resimplification_calls = 0;  // recursive invocation count
  std::uint64_t zero_likelihood_events = 0;
  double wall_ms = 0.0;
  std::vector<LevelRecord> final_levels;  // one entry per posterior belief node

  void merge(const RunLedger& other) {
    motion_calls += other.motion_calls;
    obs_calls += other.obs_calls;
    resimplification_calls += other.resimplification_calls;
    zero_likelihood_events += other.zero_likelihood_events;
    wall_ms += other.wall_ms;
    final_levels.insert(final_levels.end(), other.final_levels.begin(),
                        other.final_levels.end());
  }
};

}  // namespace belplan
