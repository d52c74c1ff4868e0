#pragma once

// Problem instances: 2D continuous Light-Dark (given-tree and anytime-MCTS
// flavours), target tracking over the joint agent-target state, safe
// localization, and the passive bounds-study belief sequence.

#include <memory>
#include <string>
#include <vector>

#include "belplan/belief.hpp"
#include "belplan/given_tree.hpp"
#include "belplan/mcts.hpp"
#include "belplan/models.hpp"
#include "belplan/reward.hpp"
#include "belplan/rng.hpp"

namespace belplan {

// Unit-length motion primitives in eight evenly spread directions, starting
// east and proceeding counterclockwise.
inline std::vector<std::vector<double>> compass_actions() {
  const double r = 1.0 / std::sqrt(2.0);
  return {{1.0, 0.0}, {r, r},   {0.0, 1.0},  {-r, r},
          {-1.0, 0.0}, {-r, -r}, {0.0, -1.0}, {r, -r}};
}

inline WeightedParticleBelief sample_gaussian_belief(const std::vector<double>& mean,
                                                     double sigma, int n_x, Rng& rng) {
  const int d = static_cast<int>(mean.size());
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> states(static_cast<std::size_t>(n_x) * d);
  for (int i = 0; i < n_x; ++i) {
    for (int k = 0; k < d; ++k) states[static_cast<std::size_t>(i) * d + k] = mean[k] + noise(rng);
  }
  return make_belief(d, std::move(states), std::vector<double>(n_x, 1.0));
}

// ---- Light-Dark, given belief tree ----

struct GivenTreeScenario {
  std::shared_ptr<TransitionModel> transition;
  std::shared_ptr<ObservationModel> obs;
  RewardSpec spec;
  GivenTreeParams tree;
  WeightedParticleBelief initial_belief;
  std::vector<double> true_state;
};

struct LightDarkConfig {
  double lambda = 0.5;
  int n_x = 100;
  int depth = 3;
  std::vector<int> obs_per_depth = {1, 3, 3};
  int n_max = 10;
  double sigma = 0.1;     // sigma_T = sigma_O
  double d_min = 0.0001;
  double gamma = 0.95;
};

inline GivenTreeScenario build_light_dark(const LightDarkConfig& cfg, std::uint64_t seed) {
  GivenTreeScenario sc;
  sc.transition = std::make_shared<IsotropicGaussianDrift>(2, cfg.sigma);
  // A small grid of beacons between the start and the goal corner.
  sc.obs = std::make_shared<BeaconObservationModel>(
      std::vector<double>{-2.0, -2.0, 2.0, -2.0, -2.0, 2.0, 2.0, 2.0}, cfg.sigma, cfg.d_min);
  sc.spec.lambda = cfg.lambda;
  sc.spec.gamma = cfg.gamma;
  sc.spec.state_reward = [](const double* x, const double*) {
    const double dx = x[0] - 4.0;
    const double dy = x[1] - 4.0;
    return -(dx * dx + dy * dy);
  };
  sc.tree.actions = compass_actions();
  sc.tree.obs_per_depth = cfg.obs_per_depth;
  sc.tree.depth_limit = cfg.depth;
  sc.tree.n_max = cfg.n_max;
  sc.true_state = {-4.0, -4.0};
  Rng rng = make_stream(seed, Purpose::kInitialBelief);
  sc.initial_belief = sample_gaussian_belief(sc.true_state, 0.5, cfg.n_x, rng);
  return sc;
}

// ---- Target tracking, given belief tree ----

struct TargetTrackingConfig {
  double lambda = 0.5;
  int n_x = 100;
  int depth = 2;
  std::vector<int> obs_per_depth = {1, 2};
  int n_max = 10;
  double sigma_t = 0.1;
  double sigma_o = 0.1;
  double d_min = 0.0001;
  double gamma = 0.95;
  bool swap_switch_sigmas = false;
};

// The target follows a known circular action buffer (up, up, left); within a
// planning session the target's primitive is held at the session's buffer
// entry, so each joint action pairs an agent primitive with it.
inline GivenTreeScenario build_target_tracking(const TargetTrackingConfig& cfg,
                                               std::uint64_t seed, int session = 0) {
  static const std::vector<std::vector<double>> kTargetBuffer = {
      {0.0, 1.0}, {0.0, 1.0}, {-1.0, 0.0}};
  GivenTreeScenario sc;
  sc.transition = std::make_shared<IsotropicGaussianDrift>(4, cfg.sigma_t);
  sc.obs = std::make_shared<TargetTrackingObservationModel>(
      std::vector<double>{-2.0, -2.0, 2.0, 2.0}, cfg.sigma_t, cfg.sigma_o, cfg.d_min,
      cfg.swap_switch_sigmas);
  sc.spec.lambda = cfg.lambda;
  sc.spec.gamma = cfg.gamma;
  sc.spec.state_reward = [](const double* x, const double*) {
    const double dx = x[0] - x[2];
    const double dy = x[1] - x[3];
    return -(dx * dx + dy * dy);
  };
  const auto& ta = kTargetBuffer[static_cast<std::size_t>(session) % kTargetBuffer.size()];
  for (const auto& a : compass_actions()) {
    sc.tree.actions.push_back({a[0], a[1], ta[0], ta[1]});
  }
  sc.tree.obs_per_depth = cfg.obs_per_depth;
  sc.tree.depth_limit = cfg.depth;
  sc.tree.n_max = cfg.n_max;
  sc.true_state = {-3.0, -3.0, 0.0, 0.0};
  Rng rng = make_stream(seed, Purpose::kInitialBelief);
  sc.initial_belief = sample_gaussian_belief(sc.true_state, 0.5, cfg.n_x, rng);
  return sc;
}

// ---- Light-Dark, anytime MCTS ----

struct MctsScenario {
  std::shared_ptr<TransitionModel> transition;
  std::shared_ptr<ObservationModel> obs;
  RewardSpec spec;
  std::vector<std::vector<double>> actions;
  int terminal_action = -1;
  std::function<double(const WeightedParticleBelief&)> terminal_reward;
  PftParams params;
  WeightedParticleBelief initial_belief;
  std::vector<double> true_state;
};

struct MctsLightDarkConfig {
  int n_x = 50;
  int depth = 30;
  int iterations = 200;
  int n_max = 10;
  double sigma = 0.075;   // sigma_T = sigma_O
  double d_min = 0.0001;
  double gamma = 0.95;
  double ucb_c = 40.0;
  bool bounded = false;
};

inline MctsScenario build_light_dark_mcts(const MctsLightDarkConfig& cfg, std::uint64_t seed) {
  MctsScenario sc;
  sc.transition = std::make_shared<IsotropicGaussianDrift>(2, cfg.sigma);
  sc.obs =
      std::make_shared<AbsolutePositionObservationModel>(-2.5, 0.0, cfg.sigma, cfg.d_min);
  sc.spec.gamma = cfg.gamma;
  sc.spec.state_coeff = 1.0;
  sc.spec.info_coeff = 1.0;
  sc.spec.state_reward = [](const double* x, const double*) {
    return -std::sqrt(x[0] * x[0] + x[1] * x[1]);
  };
  sc.actions = compass_actions();
  sc.actions.push_back({0.0, 0.0});  // the terminal stop action
  sc.terminal_action = static_cast<int>(sc.actions.size()) - 1;
  sc.terminal_reward = [](const WeightedParticleBelief& b) {
    KahanSum mass;
    for (int i = 0; i < b.size(); ++i) {
      const double* x = b.state(i);
      if (x[0] * x[0] + x[1] * x[1] <= 0.25) mass.add(b.weight(i));
    }
    return 200.0 * mass.value() - 200.0 * (1.0 - mass.value());
  };
  sc.params.depth = cfg.depth;
  sc.params.iterations = cfg.iterations;
  sc.params.ucb_c = cfg.ucb_c;
  sc.params.n_max = cfg.n_max;
  sc.params.bounded = cfg.bounded;
  sc.true_state = {-5.5, 0.0};
  Rng rng = make_stream(seed, Purpose::kInitialBelief);
  sc.initial_belief =
      sample_gaussian_belief(sc.true_state, std::sqrt(0.2), cfg.n_x, rng);
  return sc;
}

// ---- Safe localization (MCTS flavour) ----

struct SafeLocalizationConfig {
  int n_x = 50;
  int depth = 10;
  int iterations = 150;
  int n_max = 10;
  double sigma = 0.1;
  double d_min = 0.0001;
  double gamma = 0.95;
  double ucb_c = 40.0;
  double safety_weight = 500.0;
  double delta = 0.9;
  double unsafe_below_y = -3.5;  // states with y below this line are unsafe
  bool bounded = false;
};

inline MctsScenario build_safe_localization(const SafeLocalizationConfig& cfg,
                                            std::uint64_t seed) {
  MctsScenario sc;
  sc.transition = std::make_shared<IsotropicGaussianDrift>(2, cfg.sigma);
  sc.obs = std::make_shared<BeaconObservationModel>(std::vector<double>{0.0, 0.0}, cfg.sigma,
                                                    cfg.d_min);
  sc.spec.variant = RewardVariant::kSafeLocalization;
  sc.spec.gamma = cfg.gamma;
  const double line = cfg.unsafe_below_y;
  sc.spec.safety.safe_region = [line](const double* x) { return x[1] >= line; };
  sc.spec.safety.delta = cfg.delta;
  sc.spec.safety.safety_weight = cfg.safety_weight;
  sc.actions = compass_actions();
  sc.params.depth = cfg.depth;
  sc.params.iterations = cfg.iterations;
  sc.params.ucb_c = cfg.ucb_c;
  sc.params.n_max = cfg.n_max;
  sc.params.bounded = cfg.bounded;
  // The agent starts right above the unsafe region; actions with a southward
  // component push belief mass across the line.
  sc.true_state = {-2.0, -3.0};
  Rng rng = make_stream(seed, Purpose::kInitialBelief);
  sc.initial_belief = sample_gaussian_belief(sc.true_state, 0.3, cfg.n_x, rng);
  return sc;
}

// ---- Passive bounds study ----

struct BoundsStudyScenario {
  std::shared_ptr<TransitionModel> transition;
  std::shared_ptr<ObservationModel> obs;
  WeightedParticleBelief initial_belief;
  std::vector<std::vector<double>> action_sequence;
  std::vector<double> true_state;
  int n_max = 10;
};

// Importance-sampled initial belief: particles from a four-component Gaussian
// mixture proposal, weighted by the ratio of the prior N(0, 2 I) to the
// proposal density.
inline WeightedParticleBelief mixture_proposal_belief(int n_x, Rng& rng) {
  static const double kMeans[4][2] = {{0.0, 1.0}, {1.0, 0.0}, {-1.0, 0.0}, {1.0, -1.0}};
  const double var_x = 2.0, var_y = 0.2;
  std::uniform_int_distribution<int> comp(0, 3);
  std::normal_distribution<double> nx(0.0, std::sqrt(var_x));
  std::normal_distribution<double> ny(0.0, std::sqrt(var_y));
  std::vector<double> states(static_cast<std::size_t>(n_x) * 2);
  std::vector<double> weights(n_x);
  auto gauss = [](double dev, double var) {
    return std::exp(-0.5 * dev * dev / var) / std::sqrt(2.0 * M_PI * var);
  };
  for (int i = 0; i < n_x; ++i) {
    const int c = comp(rng);
    const double x = kMeans[c][0] + nx(rng);
    const double y = kMeans[c][1] + ny(rng);
    states[static_cast<std::size_t>(i) * 2] = x;
    states[static_cast<std::size_t>(i) * 2 + 1] = y;
    double q = 0.0;
    for (int m = 0; m < 4; ++m) {
      q += 0.25 * gauss(x - kMeans[m][0], var_x) * gauss(y - kMeans[m][1], var_y);
    }
    const double prior = gauss(x, 2.0) * gauss(y, 2.0);
    weights[i] = prior / q;
  }
  return make_belief(2, std::move(states), std::move(weights));
}

inline BoundsStudyScenario build_bounds_study(int n_x, int n_max, std::uint64_t seed) {
  BoundsStudyScenario sc;
  const double sigma = 0.075, d_min = 0.0001;
  sc.transition = std::make_shared<IsotropicGaussianDrift>(2, sigma);
  // Two beacons placed along the scripted path.
  sc.obs = std::make_shared<BeaconObservationModel>(std::vector<double>{2.5, 0.0, 7.5, 10.0},
                                                    sigma, d_min);
  Rng rng = make_stream(seed, Purpose::kInitialBelief);
  sc.initial_belief = mixture_proposal_belief(n_x, rng);
  // Five steps east, ten north, five east.
  for (int i = 0; i < 5; ++i) sc.action_sequence.push_back({1.0, 0.0});
  for (int i = 0; i < 10; ++i) sc.action_sequence.push_back({0.0, 1.0});
  for (int i = 0; i < 5; ++i) sc.action_sequence.push_back({1.0, 0.0});
  sc.true_state = {0.0, 0.0};
  sc.n_max = n_max;
  return sc;
}

}  // namespace belplan
