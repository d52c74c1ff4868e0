#pragma once

// Alternating planning and execution: environment stepping, episode runners
// for the given-tree and MCTS planners, paired consistency experiments, and
// the passive bounds study.

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "belplan/given_tree.hpp"
#include "belplan/mcts.hpp"
#include "belplan/metrics.hpp"
#include "belplan/scenarios.hpp"

namespace belplan {

enum class PlannerKind { kExact, kBoundedPruning, kBoundedLazy };

inline const char* planner_name(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::kExact: return "exact";
    case PlannerKind::kBoundedPruning: return "bounded-pruning";
    case PlannerKind::kBoundedLazy: return "bounded-lazy";
  }
  return "unknown";
}

struct SessionRecord {
  int session = 0;
  int action = 0;
  double reward = 0.0;  // executed-step reward, exact
  double wall_ms = 0.0;
  std::uint64_t motion_calls = 0;
  std::uint64_t obs_calls = 0;
  std::uint64_t resimplification_calls = 0;
  std::uint64_t tree_fingerprint = 0;  // MCTS runs only
};

struct EpisodeResult {
  std::vector<SessionRecord> sessions;
  double discounted_return = 0.0;
  RunLedger total;
  bool terminated = false;  // MCTS: the terminal action was executed
};

namespace detail {

inline double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

// Executes one action against the environment: advances the hidden state,
// samples the observation there, and runs the belief update.  Zero-likelihood
// observations are redrawn from the fixed new state.
struct StepOutcome {
  std::vector<double> observation;
  WeightedParticleBelief posterior;
};

inline StepOutcome environment_step(std::vector<double>& true_state,
                                    const WeightedParticleBelief& belief, const double* action,
                                    const TransitionModel& transition,
                                    const ObservationModel& obs, Rng& env_rng, Rng& update_rng,
                                    RunLedger* ledger) {
  std::vector<double> next(true_state.size());
  transition.sample(true_state.data(), action, next.data(), env_rng);
  true_state = next;
  StepOutcome out;
  out.observation.resize(obs.obs_dim());
  for (int attempt = 0; attempt < 64; ++attempt) {
    obs.sample(true_state.data(), out.observation.data(), env_rng);
    try {
      out.posterior =
          pf_update(belief, action, out.observation.data(), transition, obs, update_rng);
      return out;
    } catch (const ZeroLikelihoodObservation&) {
      if (ledger != nullptr) ++ledger->zero_likelihood_events;
    }
  }
  throw ZeroLikelihoodObservation();
}

}  // namespace detail

// Runs `sessions` alternating plan/execute rounds with a given-tree solver.
// The per-session scenario callback lets action sets vary between sessions
// (the tracked target advances its scripted primitive); the belief and the
// hidden state persist across sessions.
inline EpisodeResult run_given_tree_episode(
    const std::function<GivenTreeScenario(int session)>& scenario_for_session,
    PlannerKind kind, int sessions, std::uint64_t seed) {
  GivenTreeScenario sc = scenario_for_session(0);
  WeightedParticleBelief belief = sc.initial_belief;
  std::vector<double> true_state = sc.true_state;
  Rng env_rng = make_stream(seed, Purpose::kEnvironment);

  EpisodeResult result;
  double discount = 1.0;
  for (int s = 0; s < sessions; ++s) {
    if (s > 0) sc = scenario_for_session(s);
    const std::uint64_t session_seed = sub_seed(seed, static_cast<std::uint64_t>(s));
    RunLedger ledger;
    const double t0 = detail::now_ms();
    GivenTree tree = build_given_tree(belief, *sc.transition, *sc.obs, sc.tree, session_seed,
                                      &ledger);
    GivenTreeSolution sol;
    switch (kind) {
      case PlannerKind::kExact: sol = solve_exact(tree, sc.spec, &ledger); break;
      case PlannerKind::kBoundedPruning:
        sol = solve_bounded_pruning(tree, sc.spec, &ledger);
        break;
      case PlannerKind::kBoundedLazy: sol = solve_bounded_lazy(tree, sc.spec, &ledger); break;
    }
    ledger.wall_ms = detail::now_ms() - t0;

    const double* action = sc.tree.actions[sol.best_action].data();
    Rng update_rng = make_stream(seed, Purpose::kPropagate,
                                 0xe11e0000ULL + static_cast<std::uint64_t>(s));
    auto step = detail::environment_step(true_state, belief, action, *sc.transition, *sc.obs,
                                         env_rng, update_rng, &ledger);
    const double rho =
        composite_reward(belief, action, step.observation.data(), step.posterior,
                         *sc.transition, *sc.obs, sc.spec, nullptr);
    belief = std::move(step.posterior);

    SessionRecord rec;
    rec.session = s;
    rec.action = sol.best_action;
    rec.reward = rho;
    rec.wall_ms = ledger.wall_ms;
    rec.motion_calls = ledger.motion_calls;
    rec.obs_calls = ledger.obs_calls;
    rec.resimplification_calls = ledger.resimplification_calls;
    result.sessions.push_back(rec);
    result.total.merge(ledger);
    result.discounted_return += discount * rho;
    discount *= sc.spec.gamma;
  }
  return result;
}

// MCTS episode: plans with the particle-filter tree search, executes, stops
// early when the terminal action is chosen (its exact reward is evaluated at
// the hidden state).
inline EpisodeResult run_mcts_episode(const MctsScenario& scenario, int sessions,
                                      std::uint64_t seed) {
  WeightedParticleBelief belief = scenario.initial_belief;
  std::vector<double> true_state = scenario.true_state;
  Rng env_rng = make_stream(seed, Purpose::kEnvironment);
  PftPlanner planner(*scenario.transition, *scenario.obs, scenario.spec, scenario.actions,
                     scenario.params, scenario.terminal_action, scenario.terminal_reward);

  EpisodeResult result;
  double discount = 1.0;
  for (int s = 0; s < sessions; ++s) {
    const std::uint64_t session_seed = sub_seed(seed, static_cast<std::uint64_t>(s));
    RunLedger ledger;
    const double t0 = detail::now_ms();
    PftResult plan = planner.plan(belief, session_seed, &ledger);
    ledger.wall_ms = detail::now_ms() - t0;

    SessionRecord rec;
    rec.session = s;
    rec.action = plan.action;
    rec.wall_ms = ledger.wall_ms;
    rec.motion_calls = ledger.motion_calls;
    rec.obs_calls = ledger.obs_calls;
    rec.resimplification_calls = ledger.resimplification_calls;
    rec.tree_fingerprint = plan.tree_fingerprint;

    if (plan.action == scenario.terminal_action) {
      const double* x = true_state.data();
      const bool inside = x[0] * x[0] + x[1] * x[1] <= 0.25;
      rec.reward = inside ? 200.0 : -200.0;
      result.sessions.push_back(rec);
      result.total.merge(ledger);
      result.discounted_return += discount * rec.reward;
      result.terminated = true;
      break;
    }

    const double* action = scenario.actions[plan.action].data();
    Rng update_rng = make_stream(seed, Purpose::kPropagate,
                                 0xe11e0000ULL + static_cast<std::uint64_t>(s));
    auto step = detail::environment_step(true_state, belief, action, *scenario.transition,
                                         *scenario.obs, env_rng, update_rng, &ledger);
    rec.reward = composite_reward(belief, action, step.observation.data(), step.posterior,
                                  *scenario.transition, *scenario.obs, scenario.spec, nullptr);
    belief = std::move(step.posterior);

    result.sessions.push_back(rec);
    result.total.merge(ledger);
    result.discounted_return += discount * rec.reward;
    discount *= scenario.spec.gamma;
  }
  return result;
}

// ---- paired consistency runs ----

struct ConsistencyOutcome {
  bool identical_actions = true;
  bool identical_returns = true;
  bool identical_fingerprints = true;  // MCTS pairs only
  EpisodeResult baseline;
  EpisodeResult simplified;
};

inline ConsistencyOutcome compare_episodes(const EpisodeResult& baseline,
                                           const EpisodeResult& simplified, bool check_trees) {
  ConsistencyOutcome out;
  out.baseline = baseline;
  out.simplified = simplified;
  if (baseline.sessions.size() != simplified.sessions.size()) {
    out.identical_actions = out.identical_returns = out.identical_fingerprints = false;
    return out;
  }
  for (std::size_t i = 0; i < baseline.sessions.size(); ++i) {
    if (baseline.sessions[i].action != simplified.sessions[i].action) {
      out.identical_actions = false;
    }
    if (baseline.sessions[i].reward != simplified.sessions[i].reward) {
      out.identical_returns = false;
    }
    if (check_trees &&
        baseline.sessions[i].tree_fingerprint != simplified.sessions[i].tree_fingerprint) {
      out.identical_fingerprints = false;
    }
  }
  if (baseline.discounted_return != simplified.discounted_return) {
    out.identical_returns = false;
  }
  return out;
}

// ---- passive bounds study ----

struct BoundsStudyPoint {
  int step = 0;
  double boers = 0.0;  // minus the entropy estimate (information)
  double kde = 0.0;
  double discrete = 0.0;
  double kalman = 0.0;
  std::vector<int> levels;  // evaluated simplification levels
  std::vector<double> lower;
  std::vector<double> upper;
};

inline std::vector<BoundsStudyPoint> run_bounds_study(const BoundsStudyScenario& sc,
                                                      const std::vector<int>& levels,
                                                      std::uint64_t seed,
                                                      RunLedger* ledger = nullptr) {
  WeightedParticleBelief belief = sc.initial_belief;
  std::vector<double> true_state = sc.true_state;
  Rng env_rng = make_stream(seed, Purpose::kEnvironment);
  const SimplificationSchedule schedule = default_schedule(belief.size(), sc.n_max);
  const auto* beacon_obs = dynamic_cast<const BeaconObservationModel*>(sc.obs.get());

  IsotropicKalman2D kalman;
  kalman.mean[0] = 0.0;
  kalman.mean[1] = 0.0;
  kalman.var = 2.0;  // matches the Gaussian prior of the study

  std::vector<BoundsStudyPoint> points;
  for (std::size_t t = 0; t < sc.action_sequence.size(); ++t) {
    const double* action = sc.action_sequence[t].data();
    Rng update_rng =
        make_stream(seed, Purpose::kPropagate, 0xb0dd5000ULL + static_cast<std::uint64_t>(t));
    auto step = detail::environment_step(true_state, belief, action, *sc.transition, *sc.obs,
                                         env_rng, update_rng, ledger);

    BoundsStudyPoint point;
    point.step = static_cast<int>(t);
    point.boers = -boers_entropy(belief, action, step.observation.data(), step.posterior,
                                 *sc.transition, *sc.obs, ledger);
    point.kde = -kde_entropy(step.posterior);
    point.discrete = -discrete_weight_entropy(step.posterior);

    Rng chain_prev_rng =
        make_stream(seed, Purpose::kIndexChain, static_cast<std::uint64_t>(t));
    Rng chain_post_rng =
        make_stream(seed, Purpose::kIndexChain, static_cast<std::uint64_t>(t) + 1);
    IndexChain chain_prev = make_index_chain(belief.size(), schedule, chain_prev_rng);
    IndexChain chain_post = make_index_chain(step.posterior.size(), schedule, chain_post_rng);
    EntropyBoundsProblem problem;
    problem.prev = &belief;
    problem.post = &step.posterior;
    problem.action = sc.action_sequence[t];
    problem.observation = step.observation;
    problem.transition = sc.transition.get();
    problem.obs = sc.obs.get();
    problem.m = transition_density_max(*sc.transition);
    problem.chain_prev = &chain_prev;
    problem.chain_post = &chain_post;
    for (int level : levels) {
      const auto state = entropy_bounds_at_level(problem, level, ledger);
      point.levels.push_back(level);
      point.lower.push_back(state.lower);
      point.upper.push_back(state.upper);
    }

    // Kalman reference: the linear update with the observation covariance
    // evaluated at the hidden state.
    if (beacon_obs != nullptr) {
      const auto* drift = dynamic_cast<const IsotropicGaussianDrift*>(sc.transition.get());
      kalman.predict(action, drift != nullptr ? drift->sigma() : 0.0);
      const auto& beacons = beacon_obs->beacons();
      const std::size_t b = detail::nearest_beacon_index(true_state.data(), beacons);
      const double beacon[2] = {beacons[b], beacons[b + 1]};
      kalman.update(step.observation.data(), beacon,
                    beacon_obs->noise_scale(true_state.data()));
      point.kalman = -kalman.entropy();
    }

    // Standard tracking-filter resampling between steps.  Planners never
    // resample, but the passive study runs long trajectories where importance
    // weights would otherwise degenerate onto a handful of particles.
    Rng resample_rng =
        make_stream(seed, Purpose::kResample, static_cast<std::uint64_t>(t));
    belief = resample_belief(step.posterior, resample_rng);
    points.push_back(std::move(point));
  }
  return points;
}

}  // namespace belplan
