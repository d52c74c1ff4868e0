// Command-line front end: bounds-study, plan-given-tree, plan-mcts,
// consistency-check, benchmark.  JSON config in, CSV/SVG artifacts out; the
// schema is documented in docs/config_schema.md.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "belplan/episode.hpp"
#include "belplan/io.hpp"

using nlohmann::json;
using namespace belplan;

namespace {

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream f(path);
  if (!f) throw PlanningError("cannot open config file: " + path);
  json cfg;
  f >> cfg;
  return cfg;
}

std::filesystem::path prepare_out_dir(const std::string& out) {
  std::filesystem::path dir = out.empty() ? "." : out;
  std::filesystem::create_directories(dir);
  return dir;
}

void write_out(const std::filesystem::path& dir, const std::string& name,
               const std::string& content) {
  write_file((dir / name).string(), content);
  std::printf("wrote %s\n", (dir / name).string().c_str());
}

// ---- config -> scenario adapters ----

LightDarkConfig parse_light_dark(const json& cfg) {
  LightDarkConfig c;
  c.lambda = cfg.value("lambda", c.lambda);
  c.n_x = cfg.value("n_x", c.n_x);
  c.depth = cfg.value("depth", c.depth);
  c.obs_per_depth = cfg.value("obs_per_depth", c.obs_per_depth);
  c.n_max = cfg.value("n_max", c.n_max);
  c.sigma = cfg.value("sigma", c.sigma);
  c.d_min = cfg.value("d_min", c.d_min);
  c.gamma = cfg.value("gamma", c.gamma);
  return c;
}

TargetTrackingConfig parse_target_tracking(const json& cfg) {
  TargetTrackingConfig c;
  c.lambda = cfg.value("lambda", c.lambda);
  c.n_x = cfg.value("n_x", c.n_x);
  c.depth = cfg.value("depth", c.depth);
  c.obs_per_depth = cfg.value("obs_per_depth", c.obs_per_depth);
  c.n_max = cfg.value("n_max", c.n_max);
  c.sigma_t = cfg.value("sigma_t", c.sigma_t);
  c.sigma_o = cfg.value("sigma_o", c.sigma_o);
  c.d_min = cfg.value("d_min", c.d_min);
  c.gamma = cfg.value("gamma", c.gamma);
  c.swap_switch_sigmas = cfg.value("swap_switch_sigmas", c.swap_switch_sigmas);
  return c;
}

MctsLightDarkConfig parse_mcts_light_dark(const json& cfg) {
  MctsLightDarkConfig c;
  c.n_x = cfg.value("n_x", c.n_x);
  c.depth = cfg.value("depth", c.depth);
  c.iterations = cfg.value("iterations", c.iterations);
  c.n_max = cfg.value("n_max", c.n_max);
  c.sigma = cfg.value("sigma", c.sigma);
  c.d_min = cfg.value("d_min", c.d_min);
  c.gamma = cfg.value("gamma", c.gamma);
  c.ucb_c = cfg.value("ucb_c", c.ucb_c);
  return c;
}

SafeLocalizationConfig parse_safe_localization(const json& cfg) {
  SafeLocalizationConfig c;
  c.n_x = cfg.value("n_x", c.n_x);
  c.depth = cfg.value("depth", c.depth);
  c.iterations = cfg.value("iterations", c.iterations);
  c.n_max = cfg.value("n_max", c.n_max);
  c.sigma = cfg.value("sigma", c.sigma);
  c.d_min = cfg.value("d_min", c.d_min);
  c.gamma = cfg.value("gamma", c.gamma);
  c.ucb_c = cfg.value("ucb_c", c.ucb_c);
  c.safety_weight = cfg.value("safety_weight", c.safety_weight);
  c.delta = cfg.value("delta", c.delta);
  c.unsafe_below_y = cfg.value("unsafe_below_y", c.unsafe_below_y);
  return c;
}

std::function<GivenTreeScenario(int)> given_tree_factory(const std::string& scenario,
                                                         const json& cfg,
                                                         std::uint64_t trial_seed) {
  if (scenario == "target-tracking") {
    const auto c = parse_target_tracking(cfg);
    return [c, trial_seed](int session) { return build_target_tracking(c, trial_seed, session); };
  }
  if (scenario != "light-dark") {
    throw PlanningError("unknown given-tree scenario: " + scenario);
  }
  const auto c = parse_light_dark(cfg);
  return [c, trial_seed](int) { return build_light_dark(c, trial_seed); };
}

MctsScenario mcts_scenario(const std::string& scenario, const json& cfg, bool bounded,
                           std::uint64_t trial_seed) {
  if (scenario == "safe-localization") {
    auto c = parse_safe_localization(cfg);
    c.bounded = bounded;
    return build_safe_localization(c, trial_seed);
  }
  if (scenario != "light-dark-mcts") {
    throw PlanningError("unknown MCTS scenario: " + scenario);
  }
  auto c = parse_mcts_light_dark(cfg);
  c.bounded = bounded;
  return build_light_dark_mcts(c, trial_seed);
}

PlannerKind parse_given_tree_planner(const std::string& name) {
  if (name == "exact" || name == "ss") return PlannerKind::kExact;
  if (name == "bounded-pruning" || name == "pruning") return PlannerKind::kBoundedPruning;
  if (name == "bounded-lazy" || name == "lazy") return PlannerKind::kBoundedLazy;
  throw PlanningError("unknown planner: " + name +
                      " (expected exact|bounded-pruning|bounded-lazy)");
}

std::uint64_t trial_seed(std::uint64_t base, int trial) {
  return base + static_cast<std::uint64_t>(trial);
}

// ---- subcommands ----

int cmd_bounds_study(const json& cfg, std::uint64_t seed, const std::string& out) {
  const int n_x = cfg.value("n_x", 300);
  const int n_max = cfg.value("n_max", 10);
  const int steps = cfg.value("steps", 20);
  std::vector<int> levels = cfg.value("levels", std::vector<int>{1, 5, 9});

  auto sc = build_bounds_study(n_x, n_max, seed);
  if (steps < static_cast<int>(sc.action_sequence.size())) sc.action_sequence.resize(steps);
  RunLedger ledger;
  const auto points = run_bounds_study(sc, levels, seed, &ledger);

  const auto dir = prepare_out_dir(out);
  write_out(dir, "bounds_study.csv", bounds_study_csv(points));
  write_out(dir, "bounds_study.svg", bounds_study_svg(points));
  // Commanded path (true start plus the scripted action increments).
  std::vector<std::pair<double, double>> path;
  double x = sc.true_state[0], y = sc.true_state[1];
  path.emplace_back(x, y);
  for (const auto& a : sc.action_sequence) path.emplace_back(x += a[0], y += a[1]);
  write_out(dir, "trajectory.svg", svg_scatter("commanded trajectory", path));

  const SimplificationSchedule schedule = default_schedule(n_x, n_max);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    std::printf("level %d -> %d particles\n", levels[i], schedule.level_sizes[levels[i] - 1]);
  }
  std::printf("steps=%zu motion_calls=%llu obs_calls=%llu\n", points.size(),
              static_cast<unsigned long long>(ledger.motion_calls),
              static_cast<unsigned long long>(ledger.obs_calls));
  return 0;
}

int cmd_plan_given_tree(const json& cfg, std::uint64_t seed, int trials,
                        const std::string& planner, const std::string& out) {
  const std::string scenario = cfg.value("scenario", std::string("light-dark"));
  const int sessions = cfg.value("sessions", 5);
  const PlannerKind kind = parse_given_tree_planner(planner);

  std::string csv{kResultsHeader};
  RunLedger all;
  double mean_return = 0.0;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t ts = trial_seed(seed, t);
    const auto factory = given_tree_factory(scenario, cfg, ts);
    const auto episode = run_given_tree_episode(factory, kind, sessions, ts);
    append_result_rows(csv, scenario, planner_name(kind), ts, episode);
    all.merge(episode.total);
    mean_return += episode.discounted_return / trials;
  }

  const auto dir = prepare_out_dir(out);
  write_out(dir, "results.csv", csv);
  write_out(dir, "levels.csv", level_histogram_csv(all.final_levels));
  write_out(dir, "levels.svg", level_histogram_svg(all.final_levels));

  // Snapshot of the first trial's first-session tree with final levels.
  {
    const std::uint64_t ts = trial_seed(seed, 0);
    const auto sc = given_tree_factory(scenario, cfg, ts)(0);
    RunLedger ledger;
    GivenTree tree = build_given_tree(sc.initial_belief, *sc.transition, *sc.obs, sc.tree,
                                      sub_seed(ts, 0), &ledger);
    switch (kind) {
      case PlannerKind::kExact: solve_exact(tree, sc.spec, &ledger); break;
      case PlannerKind::kBoundedPruning: solve_bounded_pruning(tree, sc.spec, &ledger); break;
      case PlannerKind::kBoundedLazy: solve_bounded_lazy(tree, sc.spec, &ledger); break;
    }
    std::vector<int> node_levels(tree.nodes.size(), 0);
    std::size_t k = 0;
    for (const auto& node : tree.nodes) {
      if (node->parent < 0) continue;
      const int n_s = ledger.final_levels[k++].n_s;
      for (int s = 1; s <= tree.schedule.n_max; ++s) {
        if (tree.schedule.level_sizes[s - 1] == n_s) {
          node_levels[node->id] = s;
          break;
        }
      }
    }
    write_out(dir, "tree_snapshot.txt", tree_snapshot(tree, node_levels));
  }

  std::printf("%s/%s: trials=%d mean_return=%.6f motion=%llu obs=%llu speedup=%.2f%%\n",
              scenario.c_str(), planner_name(kind), trials, mean_return,
              static_cast<unsigned long long>(all.motion_calls),
              static_cast<unsigned long long>(all.obs_calls),
              particle_speedup(all.final_levels));
  return 0;
}

int cmd_plan_mcts(const json& cfg, std::uint64_t seed, int trials, const std::string& planner,
                  const std::string& out) {
  const std::string scenario = cfg.value("scenario", std::string("light-dark-mcts"));
  const int sessions = cfg.value("sessions", 10);
  bool bounded;
  if (planner == "pft" || planner == "pft-dpw" || planner == "exact") {
    bounded = false;
  } else if (planner == "pft-bounded" || planner == "bounded" || planner == "bounded-lazy" ||
             planner == "bounded-pruning") {
    bounded = true;
  } else {
    throw PlanningError("unknown planner: " + planner + " (expected pft-dpw|pft-bounded)");
  }
  const char* pname = bounded ? "pft-bounded" : "pft-dpw";

  std::string csv{kResultsHeader};
  RunLedger all;
  double mean_return = 0.0;
  int terminated = 0;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t ts = trial_seed(seed, t);
    const auto sc = mcts_scenario(scenario, cfg, bounded, ts);
    const auto episode = run_mcts_episode(sc, sessions, ts);
    append_result_rows(csv, scenario, pname, ts, episode);
    all.merge(episode.total);
    mean_return += episode.discounted_return / trials;
    terminated += episode.terminated ? 1 : 0;
  }

  const auto dir = prepare_out_dir(out);
  write_out(dir, "results.csv", csv);
  write_out(dir, "levels.csv", level_histogram_csv(all.final_levels));
  write_out(dir, "levels.svg", level_histogram_svg(all.final_levels));
  std::printf("%s/%s: trials=%d mean_return=%.6f terminated=%d motion=%llu speedup=%.2f%%\n",
              scenario.c_str(), pname, trials, mean_return, terminated,
              static_cast<unsigned long long>(all.motion_calls),
              particle_speedup(all.final_levels));
  return 0;
}

int cmd_consistency_check(const json& cfg, std::uint64_t seed, int trials,
                          const std::string& out) {
  const std::string scenario_hint = cfg.value("scenario", std::string(""));
  const bool mcts_scenario_hint = scenario_hint == "light-dark-mcts" ||
                                  scenario_hint == "safe-localization";
  const std::string mode =
      cfg.value("mode", std::string(mcts_scenario_hint ? "mcts" : "given-tree"));
  const int sessions = cfg.value("sessions", mode == "mcts" ? 5 : 3);
  std::string report =
      "mode,scenario,pair,seed,identical_actions,identical_returns,identical_trees\n";
  bool all_ok = true;
  std::string first_divergence;

  auto record = [&](const std::string& scenario, const std::string& pair, std::uint64_t ts,
                    const ConsistencyOutcome& oc, bool check_trees) {
    const bool ok = oc.identical_actions && oc.identical_returns &&
                    (!check_trees || oc.identical_fingerprints);
    report += mode + "," + scenario + "," + pair + "," + std::to_string(ts) + "," +
              (oc.identical_actions ? "1" : "0") + "," + (oc.identical_returns ? "1" : "0") +
              "," + (check_trees ? (oc.identical_fingerprints ? "1" : "0") : "-") + "\n";
    if (!ok && all_ok) {
      all_ok = false;
      first_divergence = pair + " diverged at seed " + std::to_string(ts);
    }
  };

  if (mode == "mcts") {
    const std::string scenario = cfg.value("scenario", std::string("light-dark-mcts"));
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t ts = trial_seed(seed, t);
      const auto base = run_mcts_episode(mcts_scenario(scenario, cfg, false, ts), sessions, ts);
      const auto fast = run_mcts_episode(mcts_scenario(scenario, cfg, true, ts), sessions, ts);
      record(scenario, "pft-dpw/pft-bounded", ts, compare_episodes(base, fast, true), true);
    }
  } else if (mode == "given-tree") {
    const std::string scenario = cfg.value("scenario", std::string("light-dark"));
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t ts = trial_seed(seed, t);
      const auto factory = given_tree_factory(scenario, cfg, ts);
      const auto base = run_given_tree_episode(factory, PlannerKind::kExact, sessions, ts);
      const auto pruned =
          run_given_tree_episode(factory, PlannerKind::kBoundedPruning, sessions, ts);
      const auto lazy = run_given_tree_episode(factory, PlannerKind::kBoundedLazy, sessions, ts);
      record(scenario, "exact/bounded-pruning", ts, compare_episodes(base, pruned, false), false);
      record(scenario, "exact/bounded-lazy", ts, compare_episodes(base, lazy, false), false);
    }
  } else {
    throw PlanningError("unknown consistency mode: " + mode + " (expected given-tree|mcts)");
  }

  const auto dir = prepare_out_dir(out);
  write_out(dir, "consistency.csv", report);
  if (!all_ok) throw ConsistencyViolation(first_divergence);
  std::printf("consistency-check: all %d trials identical\n", trials);
  return 0;
}

int cmd_benchmark(const json& cfg, std::uint64_t seed, int trials, const std::string& out) {
  const std::string scenario = cfg.value("scenario", std::string("light-dark"));
  const int sessions = cfg.value("sessions", 3);

  std::string summary =
      "scenario,planner,trials,mean_return,motion_calls,obs_calls,resimpl_calls,"
      "wall_ms,particle_speedup,time_speedup\n";
  double baseline_ms = 0.0;
  for (PlannerKind kind :
       {PlannerKind::kExact, PlannerKind::kBoundedPruning, PlannerKind::kBoundedLazy}) {
    RunLedger all;
    double mean_return = 0.0;
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t ts = trial_seed(seed, t);
      const auto factory = given_tree_factory(scenario, cfg, ts);
      const auto episode = run_given_tree_episode(factory, kind, sessions, ts);
      all.merge(episode.total);
      mean_return += episode.discounted_return / trials;
    }
    if (kind == PlannerKind::kExact) baseline_ms = all.wall_ms;
    summary += scenario + "," + planner_name(kind) + "," + std::to_string(trials) + "," +
               format_double(mean_return) + "," + std::to_string(all.motion_calls) + "," +
               std::to_string(all.obs_calls) + "," +
               std::to_string(all.resimplification_calls) + "," + format_double(all.wall_ms) +
               "," + format_double(particle_speedup(all.final_levels)) + "," +
               format_double(time_speedup(baseline_ms, all.wall_ms)) + "\n";
    std::printf("%s: motion=%llu obs=%llu speedup=%.2f%%\n", planner_name(kind),
                static_cast<unsigned long long>(all.motion_calls),
                static_cast<unsigned long long>(all.obs_calls),
                particle_speedup(all.final_levels));
  }

  const auto dir = prepare_out_dir(out);
  write_out(dir, "benchmark.csv", summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"belplan: belief-space planning with adaptive simplification"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", planner;
  std::uint64_t seed = 1;
  int trials = 1;
  app.add_option("--config", config_path, "JSON config file")->capture_default_str();
  app.add_option("--seed", seed, "base seed")->capture_default_str();
  app.add_option("--trials", trials, "number of independent trials")->capture_default_str();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--planner", planner, "planner name");

  auto* bounds = app.add_subcommand("bounds-study", "entropy-bound width study");
  auto* given = app.add_subcommand("plan-given-tree", "sparse-tree episode runner");
  auto* mcts = app.add_subcommand("plan-mcts", "particle-filter tree search episode runner");
  auto* consistency =
      app.add_subcommand("consistency-check", "paired baseline/simplified run");
  auto* bench = app.add_subcommand("benchmark", "planner cost comparison");
  for (CLI::App* sub : {bounds, given, mcts, consistency, bench}) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "base seed");
    sub->add_option("--trials", trials, "number of independent trials");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--planner", planner, "planner name");
  }

  CLI11_PARSE(app, argc, argv);
  try {
    const json cfg = load_config(config_path);
    if (bounds->parsed()) return cmd_bounds_study(cfg, seed, out_dir);
    if (given->parsed()) {
      return cmd_plan_given_tree(cfg, seed, trials,
                                 planner.empty() ? "bounded-lazy" : planner, out_dir);
    }
    if (mcts->parsed()) {
      return cmd_plan_mcts(cfg, seed, trials, planner.empty() ? "pft-bounded" : planner, out_dir);
    }
    if (consistency->parsed()) return cmd_consistency_check(cfg, seed, trials, out_dir);
    if (bench->parsed()) return cmd_benchmark(cfg, seed, trials, out_dir);
  } catch (const ConsistencyViolation& e) {
    std::fprintf(stderr, "consistency violation: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
