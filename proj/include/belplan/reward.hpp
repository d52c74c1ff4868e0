#pragma once

// Composite belief-dependent reward rho = (1-lambda) r^x + lambda (-H) and its
// interval form driven by the entropy bounds; safe-localization variant
// rho = -H + safety_weight * (2 * 1{P(safe|b') >= delta} - 1).

#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "belplan/belief.hpp"
#include "belplan/common.hpp"
#include "belplan/entropy.hpp"
#include "belplan/ledger.hpp"
#include "belplan/models.hpp"

namespace belplan {

enum class RewardVariant { kEntropy, kSafeLocalization };

struct SafetySpec {
  std::function<bool(const double* state)> safe_region;
  double delta = 0.9;
  double safety_weight = 0.0;
};

struct RewardSpec {
  double lambda = 0.5;  // information weight, in [0, 1]
  double gamma = 0.95;  // discount, in (0, 1]
  RewardVariant variant = RewardVariant::kEntropy;
  std::function<double(const double* state, const double* action)> state_reward;
  SafetySpec safety;  // used by the safe-localization variant only
  // Optional explicit term coefficients; NaN defers to the convex lambda mix.
  double state_coeff = std::numeric_limits<double>::quiet_NaN();
  double info_coeff = std::numeric_limits<double>::quiet_NaN();

  double state_weight() const { return std::isnan(state_coeff) ? 1.0 - lambda : state_coeff; }
  double info_weight() const { return std::isnan(info_coeff) ? lambda : info_coeff; }
};

struct RewardInterval {
  double lower = 0.0;
  double upper = 0.0;
  int level = 0;
  double rx = 0.0;           // exact state-reward component
  double safety_term = 0.0;  // exact safety component (safe variant)
  std::optional<EntropyBoundsState> entropy_state;  // absent for exact rewards

  double gap() const { return upper - lower; }
};

// Weighted mean of the state reward over the belief's particles.
inline double expected_state_reward(const WeightedParticleBelief& belief, const double* action,
                                    const RewardSpec& spec) {
  KahanSum acc;
  for (int i = 0; i < belief.size(); ++i) {
    acc.add(belief.weight(i) * spec.state_reward(belief.state(i), action));
  }
  return acc.value();
}

// safety_weight * (2 * 1{weight mass inside the safe region >= delta} - 1).
inline double safety_reward(const WeightedParticleBelief& post, const SafetySpec& safety) {
  KahanSum mass;
  for (int i = 0; i < post.size(); ++i) {
    if (safety.safe_region(post.state(i))) mass.add(post.weight(i));
  }
  return safety.safety_weight * (mass.value() >= safety.delta ? 1.0 : -1.0);
}

// Exact composite reward (full-level entropy estimator).
inline double composite_reward(const WeightedParticleBelief& prev, const double* action,
                               const double* observation, const WeightedParticleBelief& post,
                               const TransitionModel& transition, const ObservationModel& obs,
                               const RewardSpec& spec, RunLedger* ledger = nullptr) {
  const double neg_entropy =
      -boers_entropy(prev, action, observation, post, transition, obs, ledger);
  if (spec.variant == RewardVariant::kSafeLocalization) {
    return neg_entropy + safety_reward(post, spec.safety);
  }
  return spec.state_weight() * expected_state_reward(post, action, spec) +
         spec.info_weight() * neg_entropy;
}

namespace detail {

inline void apply_entropy_interval(RewardInterval& ri, const RewardSpec& spec) {
  const EntropyBoundsState& es = *ri.entropy_state;
  ri.level = es.level;
  if (spec.variant == RewardVariant::kSafeLocalization) {
    ri.lower = es.lower + ri.safety_term;
    ri.upper = es.upper + ri.safety_term;
  } else {
    ri.lower = spec.state_weight() * ri.rx + spec.info_weight() * es.lower;
    ri.upper = spec.state_weight() * ri.rx + spec.info_weight() * es.upper;
  }
}

}  // namespace detail

// Interval form at the given simplification level.
inline RewardInterval composite_reward_bounds(const EntropyBoundsProblem& problem,
                                              const RewardSpec& spec, int level,
                                              RunLedger* ledger = nullptr) {
  RewardInterval ri;
  if (spec.variant == RewardVariant::kSafeLocalization) {
    ri.safety_term = safety_reward(*problem.post, spec.safety);
  } else {
    ri.rx = expected_state_reward(*problem.post, problem.action.data(), spec);
  }
  ri.entropy_state = entropy_bounds_at_level(problem, level, ledger);
  detail::apply_entropy_interval(ri, spec);
  return ri;
}

// Promotes the interval one level; never widens.  Promotion at the maximum
// level is absorbed as a no-op (validity is handled by the caller).
inline bool promote_reward(const EntropyBoundsProblem& problem, RewardInterval& ri,
                           const RewardSpec& spec, RunLedger* ledger = nullptr) {
  if (!ri.entropy_state.has_value()) return false;
  if (ri.entropy_state->level >= problem.chain_prev->schedule.n_max) return false;
  promote_entropy_bounds(problem, *ri.entropy_state, ledger);
  detail::apply_entropy_interval(ri, spec);
  return true;
}

}  // namespace belplan
